#include "sacl/encoder.hpp"
#include "sacl/objective.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace sacl;

namespace {

const std::array<double, 3> kUnit{1.0, 1.0, 1.0};

LabelWeights weights_of(std::array<double, 3> w) {
  LabelWeights out;
  out.weight = w;
  return out;
}

Matrix rows(std::initializer_list<std::initializer_list<double>> values) {
  Matrix m(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : values) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

}  // namespace

TEST_CASE("classifier head basics") {
  ClassifierHead head(4, 1);
  head.weight.value.setZero();
  head.bias.value.setZero();
  std::mt19937_64 rng(1);
  const Matrix h = oracle::random_matrix(rng, 5, 4);
  const Matrix z = classifier_logits(h, head);
  CHECK(z.isZero(0.0));
  const Matrix p = softmax_rows(z);
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index k = 0; k < 3; ++k) CHECK(p(i, k) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  ClassifierHead identity(3, 1);
  identity.weight.value = Matrix::Identity(3, 3);
  identity.bias.value.setZero();
  for (int k = 0; k < 3; ++k) {
    Matrix onehot = Matrix::Zero(1, 3);
    onehot(0, k) = 1.0;
    CHECK(classifier_logits(onehot, identity) == onehot);
  }

  ClassifierHead random_head(4, 9);
  const Matrix probs = softmax_rows(classifier_logits(oracle::random_matrix(rng, 20, 4, 3.0), random_head));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) CHECK(std::abs(probs.row(i).sum() - 1.0) < 1e-12);

  CHECK_THROWS_AS(classifier_logits(Matrix::Zero(2, 5), random_head), Error);
}

TEST_CASE("cross entropy examples") {
  const std::vector<Polarity> pos1{Polarity::positive};
  CHECK(ce_loss(Matrix::Zero(1, 3), pos1, LabelWeights{}).value == doctest::Approx(std::log(3.0)).epsilon(1e-15));
  CHECK(ce_loss(Matrix::Zero(1, 3), pos1, LabelWeights{}).value == doctest::Approx(1.0986).epsilon(1e-4));

  const std::vector<Polarity> gold{Polarity::positive, Polarity::negative, Polarity::neutral};
  Matrix confident = Matrix::Zero(3, 3);
  for (int i = 0; i < 3; ++i) confident(i, i) = 800.0;
  CHECK(ce_loss(confident, gold, LabelWeights{}).value < 1e-12);

  const std::vector<Polarity> two_pos{Polarity::positive, Polarity::positive};
  const auto w = weights_of({2.0, 1.0, 1.0});
  const double by_hand = 2.0 * std::log(3.0) + 2.0 * std::log(3.0);
  const auto sum = ce_loss(Matrix::Zero(2, 3), two_pos, w, Reduction::sum);
  const auto mean = ce_loss(Matrix::Zero(2, 3), two_pos, w, Reduction::mean);
  CHECK(sum.value == doctest::Approx(by_hand).epsilon(1e-14));
  CHECK(sum.value == doctest::Approx(4.394).epsilon(1e-3));
  CHECK(mean.value == doctest::Approx(by_hand / 2.0).epsilon(1e-14));
  CHECK(mean.value == doctest::Approx(2.197).epsilon(1e-3));

  Matrix bad = Matrix::Zero(1, 3);
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(ce_loss(bad, pos1, LabelWeights{}), Error);
}

TEST_CASE("cross entropy matches the per-sample oracle") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = 1 + static_cast<Eigen::Index>(rng() % 12);
    const Matrix z = oracle::random_matrix(rng, n, 3, 2.0);
    const auto y = oracle::random_labels(rng, static_cast<std::size_t>(n));
    const std::array<double, 3> w{0.5 + (rng() % 100) / 50.0, 0.5 + (rng() % 100) / 50.0, 0.5 + (rng() % 100) / 50.0};
    CHECK(ce_loss(z, y, weights_of(w)).value == doctest::Approx(oracle::weighted_ce(z, y, w)).epsilon(1e-12));
    CHECK(ce_loss(z, y, weights_of(w), Reduction::mean).value ==
          doctest::Approx(oracle::weighted_ce(z, y, w, true)).epsilon(1e-12));
  }
}

TEST_CASE("contrastive loss examples") {
  const std::vector<Polarity> same{Polarity::positive, Polarity::positive};
  CHECK(scl_loss(rows({{1, 2, 0}, {1, 2, 0}}), same, 0.5).value == doctest::Approx(0.0).epsilon(1e-15));

  const std::vector<Polarity> distinct{Polarity::positive, Polarity::negative, Polarity::neutral};
  const auto empty = scl_loss(rows({{1, 0, 0}, {0, 1, 0}, {3, 1, 2}}), distinct, 0.1);
  CHECK(empty.value == 0.0);
  CHECK(empty.grad_logits.isZero(0.0));

  const Matrix z = rows({{1, 0}, {1, 0}, {0, 1}});
  const std::vector<Polarity> aab{Polarity::positive, Polarity::positive, Polarity::negative};
  const double expected = 2.0 * std::log(1.0 + std::exp(-1.0));
  CHECK(scl_loss(z, aab, 1.0).value == doctest::Approx(expected).epsilon(1e-14));
  CHECK(scl_loss(z, aab, 1.0).value == doctest::Approx(0.6266).epsilon(1e-4));
  CHECK(oracle::scl_bruteforce(z, aab, 1.0) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(scl_loss(z, aab, 1.0, Reduction::mean).value == doctest::Approx(expected / 3.0).epsilon(1e-14));

  CHECK_THROWS_AS(scl_loss(z, aab, 0.0), Error);
  CHECK_THROWS_AS(scl_loss(z, aab, -1.0), Error);
  CHECK(scl_loss(rows({{1, 2, 3}}), std::vector<Polarity>{Polarity::neutral}, 0.1).value == 0.0);
}

TEST_CASE("contrastive loss matches the brute-force oracle on random batches") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = 2 + static_cast<Eigen::Index>(rng() % 15);
    const double tau = trial % 2 ? 0.1 : 1.0;
    const Matrix z = oracle::random_matrix(rng, n, 3, tau < 0.5 ? 0.5 : 2.0);
    const auto y = oracle::random_labels(rng, static_cast<std::size_t>(n));
    const double expected = oracle::scl_bruteforce(z, y, tau);
    CHECK(scl_loss(z, y, tau).value == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("large logits stay finite in the contrastive loss") {
  const Matrix z = rows({{40, 0, 0}, {39, 1, 0}, {0, 40, 0}});
  const std::vector<Polarity> y{Polarity::positive, Polarity::positive, Polarity::negative};
  const auto v = scl_loss(z, y, 0.1);
  CHECK(std::isfinite(v.value));
  CHECK(v.grad_logits.allFinite());
}

TEST_CASE("soft-SCL composition") {
  const Matrix z = rows({{1, 0, 0}, {1, 0, 0}, {0, 1, 0}});
  const std::vector<Polarity> aab{Polarity::positive, Polarity::positive, Polarity::negative};
  const auto w = weights_of({1.0, 1.3, 0.7});

  const auto zero = soft_scl_loss(z, aab, w, 0.0, 0.1);
  const auto ce = ce_loss(z, aab, w);
  CHECK(zero.total == ce.value);
  CHECK(zero.grad_logits == ce.grad_logits);

  const auto soft = soft_scl_loss(z, aab, w, 0.1, 1.0);
  const double scl = scl_loss(z, aab, 1.0).value;
  CHECK(soft.total == doctest::Approx(ce.value + 0.1 * scl).epsilon(1e-14));
  CHECK(soft.total == doctest::Approx(ce.value + 0.1 * 0.6266).epsilon(1e-4));
  CHECK(soft.ce == doctest::Approx(ce.value).epsilon(1e-15));
  CHECK(soft.scl == doctest::Approx(scl).epsilon(1e-15));

  Matrix perfect = Matrix::Zero(2, 3);
  perfect(0, 0) = perfect(1, 0) = 800.0;
  const std::vector<Polarity> both_pos{Polarity::positive, Polarity::positive};
  CHECK(soft_scl_loss(perfect, both_pos, LabelWeights{}, 0.1, 0.1).total < 1e-12);
}

TEST_CASE("FGM perturbation") {
  CHECK(fgm_perturbation(Matrix::Zero(4, 3), 5.0).isZero(0.0));
  const Matrix r = fgm_perturbation(rows({{3, 4}}), 0.5);
  CHECK(r(0, 0) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(r(0, 1) == doctest::Approx(0.4).epsilon(1e-15));

  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const double eps = 0.01 + (rng() % 1000) / 100.0;
    const Matrix g = oracle::random_matrix(rng, 1 + rng() % 20, 8, std::pow(10.0, static_cast<int>(rng() % 9) - 4));
    CHECK(std::abs(fgm_perturbation(g, eps).norm() - eps) < 1e-9);
  }
  CHECK(fgm_perturbation(rows({{3, 4}}), 0.0).isZero(0.0));

  Matrix bad = rows({{1, INFINITY}});
  CHECK_THROWS_AS(fgm_perturbation(bad, 1.0), Error);
}

TEST_CASE("SACL total") {
  CHECK(sacl_loss(1.25, 1.25) == 2.5);
  CHECK(sacl_loss(1.25, std::nullopt) == 1.25);
}

TEST_CASE("prediction ties go to the earliest category") {
  CHECK(predict(rows({{2, 0, 0}}))[0] == Polarity::positive);
  CHECK(predict(rows({{1, 1, 0}}))[0] == Polarity::positive);
  CHECK(predict(rows({{0, 0, 0}}))[0] == Polarity::positive);
  CHECK(predict(rows({{0, 1, 1}}))[0] == Polarity::negative);
  CHECK(predict(rows({{0, 1, 2}}))[0] == Polarity::neutral);

  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix z = oracle::random_matrix(rng, 6, 3);
    const double c = oracle::random_matrix(rng, 1, 1, 10.0)(0, 0);
    CHECK(predict(z) == predict((z.array() + c).matrix()));
  }
}

TEST_CASE("loss gradients with respect to logits") {
  std::mt19937_64 rng(21);
  for (int instance = 0; instance < 20; ++instance) {
    const auto n = 2 + static_cast<Eigen::Index>(rng() % 8);
    Matrix z = oracle::random_matrix(rng, n, 3, 1.5);
    const auto y = oracle::random_labels(rng, static_cast<std::size_t>(n));
    const auto w = weights_of({0.7, 1.2, 1.9});
    const auto red = instance % 2 ? Reduction::mean : Reduction::sum;
    const double tau = instance % 3 ? 0.5 : 1.0;

    const Matrix ce_numeric = oracle::numeric_gradient(z, [&] { return ce_loss(z, y, w, red).value; });
    CHECK(oracle::relative_error(ce_loss(z, y, w, red).grad_logits, ce_numeric) < 1e-4);

    const Matrix scl_numeric = oracle::numeric_gradient(z, [&] { return scl_loss(z, y, tau, red).value; });
    CHECK(oracle::relative_error(scl_loss(z, y, tau, red).grad_logits, scl_numeric) < 1e-4);

    const Matrix soft_numeric =
        oracle::numeric_gradient(z, [&] { return soft_scl_loss(z, y, w, 0.1, tau, red).total; });
    CHECK(oracle::relative_error(soft_scl_loss(z, y, w, 0.1, tau, red).grad_logits, soft_numeric) < 1e-4);
  }
}

TEST_CASE("predicted-label positives have matching gradients away from ties") {
  std::mt19937_64 rng(22);
  for (int instance = 0; instance < 10; ++instance) {
    Matrix z = oracle::random_matrix(rng, 8, 3, 2.0);
    const auto y = oracle::random_labels(rng, 8);
    const auto analytic = scl_loss(z, y, 0.5, Reduction::sum, PositiveSet::predicted);
    const Matrix numeric = oracle::numeric_gradient(
        z, [&] { return scl_loss(z, y, 0.5, Reduction::sum, PositiveSet::predicted).value; }, 1e-6);
    CHECK(oracle::relative_error(analytic.grad_logits, numeric) < 1e-4);

    // The positive set follows argmax(z), so relabelling the gold labels changes nothing.
    const auto other = oracle::random_labels(rng, 8);
    CHECK(scl_loss(z, other, 0.5, Reduction::sum, PositiveSet::predicted).value == analytic.value);
  }
}

TEST_CASE("loss gradients with respect to head parameters and pooled vectors") {
  std::mt19937_64 rng(23);
  for (int instance = 0; instance < 20; ++instance) {
    const auto n = 2 + static_cast<Eigen::Index>(rng() % 8);
    ClassifierHead head(6, 100 + instance);
    head.weight.value = oracle::random_matrix(rng, 6, 3, 0.5);
    head.bias.value = oracle::random_matrix(rng, 1, 3, 0.5);
    Matrix h = oracle::random_matrix(rng, n, 6);
    const auto y = oracle::random_labels(rng, static_cast<std::size_t>(n));
    const auto w = weights_of({1.1, 0.8, 1.4});

    auto loss = [&] { return soft_scl_loss(classifier_logits(h, head), y, w, 0.1, 0.5).total; };
    head.weight.zero_grad();
    head.bias.zero_grad();
    const auto value = soft_scl_loss(classifier_logits(h, head), y, w, 0.1, 0.5);
    const Matrix grad_h = classifier_backward(h, value.grad_logits, head);

    CHECK(oracle::relative_error(head.weight.grad, oracle::numeric_gradient(head.weight.value, loss)) < 1e-4);
    CHECK(oracle::relative_error(head.bias.grad, oracle::numeric_gradient(head.bias.value, loss)) < 1e-4);
    CHECK(oracle::relative_error(grad_h, oracle::numeric_gradient(h, loss)) < 1e-4);
  }
}

TEST_CASE("loss gradients with respect to embedding matrices") {
  CompactEncoderConfig cfg;
  cfg.vocab_size = 500;
  cfg.hidden_size = 12;
  cfg.num_heads = 3;
  cfg.ffn_size = 16;
  std::mt19937_64 rng(24);
  const std::vector<std::string> texts{"alpha beta", "gamma delta epsilon", "alpha zeta", "beta beta eta"};
  for (int instance = 0; instance < 20; ++instance) {
    cfg.seed = 300 + instance;
    CompactEncoder enc(cfg);
    ClassifierHead head(12, 400 + instance);
    const auto y = oracle::random_labels(rng, texts.size());
    std::vector<TokenSequence> seqs;
    std::vector<Matrix> embs;
    for (const auto& t : texts) {
      seqs.push_back(enc.tokenize(compose_input("", t), kMaxTokens));
      embs.push_back(enc.embed(seqs.back()));
    }
    const auto w = weights_of({1.0, 2.0, 0.5});
    const auto which = instance % 3;

    auto pooled_of = [&] {
      Matrix h(static_cast<Eigen::Index>(texts.size()), 12);
      for (std::size_t i = 0; i < texts.size(); ++i) {
        h.row(static_cast<Eigen::Index>(i)) = enc.encode_from_embeddings(embs[i], seqs[i].mask).pooled.transpose();
      }
      return h;
    };
    auto eval = [&](const Matrix& z) -> LossValue {
      if (which == 0) return ce_loss(z, y, w);
      if (which == 1) return scl_loss(z, y, 0.5);
      const auto s = soft_scl_loss(z, y, w, 0.1, 0.5);
      return {s.total, s.grad_logits};
    };
    auto loss = [&] { return eval(classifier_logits(pooled_of(), head)).value; };

    std::vector<std::unique_ptr<ForwardTrace>> traces;
    Matrix h(static_cast<Eigen::Index>(texts.size()), 12);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      auto res = enc.forward(embs[i], seqs[i].mask, ForwardOptions{});
      h.row(static_cast<Eigen::Index>(i)) = res.pooled.transpose();
      traces.push_back(std::move(res.trace));
    }
    const auto value = eval(classifier_logits(h, head));
    const Matrix grad_h = classifier_backward(h, value.grad_logits, head);
    const auto target = static_cast<std::size_t>(instance) % texts.size();
    const Matrix analytic = enc.backward(*traces[target], grad_h.row(static_cast<Eigen::Index>(target)).transpose());
    const Matrix numeric = oracle::numeric_gradient(embs[target], loss);
    CHECK(oracle::relative_error(analytic, numeric) < 1e-4);
  }
}
