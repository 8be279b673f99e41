#include "sacl/objective.hpp"

#include "sacl/seed.hpp"

#include <cmath>
#include <limits>

namespace sacl {

namespace {

void check_batch(const Matrix& logits, std::span<const Polarity> labels, const char* what,
                 bool per_category = true) {
  if (per_category && logits.cols() != kNumPolarities) {
    throw Error(std::string(what) + ": logits must have one column per category");
  }
  if (logits.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw Error(std::string(what) + ": logits and labels disagree on batch size");
  }
  if (!logits.allFinite()) throw Error(std::string(what) + ": non-finite logits");
}

double reduce_scale(Reduction r, Eigen::Index batch) {
  return r == Reduction::mean && batch > 0 ? 1.0 / static_cast<double>(batch) : 1.0;
}

}  // namespace

void LossConfig::validate() const {
  if (!(temperature > 0.0)) throw Error("temperature must be > 0");
  if (!(temperature_adv > 0.0)) throw Error("adversarial temperature must be > 0");
  if (!(radius >= 0.0)) throw Error("perturbation radius must be >= 0");
  if (!(rate >= 0.0 && rate <= 1.0)) throw Error("perturbation rate must lie in [0, 1]");
  if (!(lambda >= 0.0) || !(lambda_adv >= 0.0)) throw Error("trade-off weights must be >= 0");
  for (double w : weights.weight) {
    if (!(w > 0.0) || !std::isfinite(w)) throw Error("label weights must be positive and finite");
  }
}

ClassifierHead::ClassifierHead(int hidden_size, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "head-init"));
  Matrix w(hidden_size, kNumPolarities);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = 0.02 * standard_normal(rng);
  weight = Parameter("head.weight", std::move(w));
  bias = Parameter("head.bias", Matrix::Zero(1, kNumPolarities));
}

Matrix classifier_logits(const Matrix& pooled, const ClassifierHead& head) {
  if (pooled.cols() != head.weight.value.rows()) {
    throw Error("classifier_logits: pooled width " + std::to_string(pooled.cols()) +
                " does not match head input " + std::to_string(head.weight.value.rows()));
  }
  Matrix z = pooled * head.weight.value;
  z.rowwise() += head.bias.value.row(0);
  return z;
}

Matrix classifier_backward(const Matrix& pooled, const Matrix& grad_logits, ClassifierHead& head) {
  head.weight.grad.noalias() += pooled.transpose() * grad_logits;
  head.bias.grad.row(0) += grad_logits.colwise().sum();
  return grad_logits * head.weight.value.transpose();
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - mx).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

LossValue ce_loss(const Matrix& logits, std::span<const Polarity> labels, const LabelWeights& weights,
                  Reduction reduction) {
  check_batch(logits, labels, "ce_loss");
  const double s = reduce_scale(reduction, logits.rows());
  LossValue out;
  out.grad_logits = softmax_rows(logits);
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int y = index_of(labels[i]);
    const double w = weights[labels[i]];
    const double mx = logits.row(i).maxCoeff();
    const double lse = mx + std::log((logits.row(i).array() - mx).exp().sum());
    out.value += w * (lse - logits(i, y));
    out.grad_logits(i, y) -= 1.0;
    out.grad_logits.row(i) *= w * s;
  }
  out.value *= s;
  return out;
}

LossValue scl_loss(const Matrix& logits, std::span<const Polarity> labels, double temperature,
                   Reduction reduction, PositiveSet positives) {
  check_batch(logits, labels, "scl_loss", positives == PositiveSet::predicted);
  if (!(temperature > 0.0)) throw Error("scl_loss: temperature must be > 0");
  const auto n = logits.rows();
  const double s = reduce_scale(reduction, n);

  std::vector<Polarity> group(labels.begin(), labels.end());
  if (positives == PositiveSet::predicted) group = predict(logits);

  const Matrix sim = (logits * logits.transpose()) / temperature;
  // coef(i, a) = dl_i / dsim(i, a)
  Matrix coef = Matrix::Zero(n, n);
  LossValue out;
  for (Eigen::Index i = 0; i < n; ++i) {
    int num_pos = 0;
    double pos_sum = 0.0;
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < n; ++a) {
      if (a == i) continue;
      mx = std::max(mx, sim(i, a));
      if (group[a] == group[i]) {
        ++num_pos;
        pos_sum += sim(i, a);
      }
    }
    if (num_pos == 0) continue;
    double denom = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
      if (a != i) denom += std::exp(sim(i, a) - mx);
    }
    const double lse = mx + std::log(denom);
    out.value += lse - pos_sum / num_pos;
    for (Eigen::Index a = 0; a < n; ++a) {
      if (a == i) continue;
      coef(i, a) = std::exp(sim(i, a) - lse) - (group[a] == group[i] ? 1.0 / num_pos : 0.0);
    }
  }
  out.value *= s;
  out.grad_logits = ((coef + coef.transpose()) * logits) * (s / temperature);
  return out;
}

SoftSclValue soft_scl_loss(const Matrix& logits, std::span<const Polarity> labels,
                           const LabelWeights& weights, double lambda, double temperature,
                           Reduction reduction, PositiveSet positives) {
  auto ce = ce_loss(logits, labels, weights, reduction);
  SoftSclValue out;
  out.ce = ce.value;
  out.grad_logits = std::move(ce.grad_logits);
  // lambda == 0 skips the contrastive term entirely, leaving the CE path untouched.
  if (lambda != 0.0) {
    auto scl = scl_loss(logits, labels, temperature, reduction, positives);
    out.scl = scl.value;
    out.grad_logits += lambda * scl.grad_logits;
  }
  out.total = out.ce + lambda * out.scl;
  return out;
}

Matrix fgm_perturbation(const Matrix& grad, double epsilon) {
  if (!grad.allFinite()) throw Error("fgm_perturbation: non-finite gradient");
  const double norm = grad.norm();
  if (norm == 0.0) return Matrix::Zero(grad.rows(), grad.cols());
  return grad * (epsilon / norm);
}

double sacl_loss(double clean_soft_scl, std::optional<double> adversarial_soft_scl) {
  return clean_soft_scl + adversarial_soft_scl.value_or(0.0);
}

std::vector<Polarity> predict(const Matrix& logits) {
  std::vector<Polarity> out(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (int c = 1; c < logits.cols(); ++c) {
      if (logits(i, c) > logits(i, best)) best = c;
    }
    out[i] = polarity_at(best);
  }
  return out;
}

}  // namespace sacl
