#include "sacl/trainer.hpp"

#include "sacl/metrics.hpp"
#include "sacl/seed.hpp"

#include <cmath>
#include <future>
#include <mutex>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace sacl {

void TrainConfig::validate() const {
  if (epochs <= 0) throw Error("epochs must be positive");
  if (patience <= 0 || patience > epochs) throw Error("patience must be positive and <= epochs");
  if (batch_size <= 0) throw Error("batch_size must be positive");
  if (!(learning_rate > 0.0)) throw Error("learning_rate must be positive");
  if (!(weight_decay >= 0.0)) throw Error("weight_decay must be >= 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("dropout must lie in [0, 1)");
  if (max_len < 4) throw Error("max_len must be >= 4");
  if (max_prefix_tokens <= 0) throw Error("max_prefix_tokens must be positive");
  if (folds < 2) throw Error("folds must be >= 2");
  loss.validate();
}

std::vector<EncodedExample> encode_dataset(const Dataset& dataset, const Encoder& encoder,
                                           const LexiconSet& lexicons, const TrainConfig& config) {
  std::vector<EncodedExample> out;
  out.reserve(dataset.size());
  for (const auto& ex : dataset.examples) {
    const LexiconMatcher* matcher = nullptr;
    if (config.use_lexicon) {
      const auto it = lexicons.find(ex.language);
      if (it != lexicons.end()) matcher = &it->second;
    }
    const auto composed = compose_with_lexicon(ex.text, matcher, config.max_prefix_tokens);
    out.push_back({ex.id, ex.language, ex.label, encoder.tokenize(composed, config.max_len)});
  }
  return out;
}

SentimentModel make_model(const TrainConfig& config) {
  auto enc_cfg = config.encoder;
  enc_cfg.seed = derive_seed(config.seed, "encoder");
  enc_cfg.max_positions = std::max(enc_cfg.max_positions, config.max_len);
  return SentimentModel(std::make_unique<CompactEncoder>(enc_cfg), derive_seed(config.seed, "head"));
}

// ---------------------------------------------------------------------------
// Step
// ---------------------------------------------------------------------------

namespace {

struct BranchOutput {
  SoftSclValue loss;
  std::vector<Matrix> grad_embeddings;
};

BranchOutput run_branch(SentimentModel& model, std::span<const EncodedExample* const> batch,
                        const std::vector<Matrix>& embeddings, std::span<const Polarity> labels,
                        const LossConfig& loss, double lambda, double temperature, double dropout,
                        const StepOptions& options, std::uint64_t branch) {
  auto& encoder = model.encoder();
  const auto n = static_cast<Eigen::Index>(batch.size());
  std::vector<std::unique_ptr<ForwardTrace>> traces;
  traces.reserve(batch.size());
  Matrix pooled(n, encoder.hidden_size());
  for (Eigen::Index i = 0; i < n; ++i) {
    ForwardOptions fo;
    fo.train = options.train_mode;
    fo.dropout = dropout;
    fo.dropout_seed = derive_seed(options.dropout_seed, "sample", {static_cast<std::uint64_t>(i), branch});
    auto res = encoder.forward(embeddings[i], batch[i]->tokens.mask, fo);
    pooled.row(i) = res.pooled.transpose();
    traces.push_back(std::move(res.trace));
  }
  const Matrix logits = classifier_logits(pooled, model.head());
  BranchOutput out;
  out.loss = soft_scl_loss(logits, labels, loss.weights, lambda, temperature, loss.reduction, loss.positives);
  const Matrix grad_pooled = classifier_backward(pooled, out.loss.grad_logits, model.head());
  out.grad_embeddings.reserve(batch.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    Matrix g = encoder.backward(*traces[i], grad_pooled.row(i).transpose());
    encoder.accumulate_embedding_grad(batch[i]->tokens, g);
    out.grad_embeddings.push_back(std::move(g));
  }
  return out;
}

double gradient_norm(SentimentModel& model) {
  double sq = 0.0;
  for (auto* p : model.parameters()) {
    if (p->row_sparse) {
      std::vector<Eigen::Index> rows = p->touched_rows;
      std::sort(rows.begin(), rows.end());
      rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
      for (auto r : rows) sq += p->grad.row(r).squaredNorm();
    } else {
      sq += p->grad.squaredNorm();
    }
  }
  return std::sqrt(sq);
}

}  // namespace

StepReport accumulate_sacl_gradients(SentimentModel& model, std::span<const EncodedExample* const> batch,
                                     const LossConfig& loss, double dropout, const StepOptions& options) {
  if (batch.empty()) throw Error("train_step: empty batch");
  std::vector<Polarity> labels;
  std::vector<Matrix> embeddings;
  for (const auto* ex : batch) {
    labels.push_back(ex->label);
    embeddings.push_back(model.encoder().embed(ex->tokens));
  }

  StepReport report;
  auto guarded = [&](const char* branch, double lambda, double temperature, std::uint64_t index) {
    try {
      return run_branch(model, batch, embeddings, labels, loss, lambda, temperature, dropout, options, index);
    } catch (const TrainingError&) {
      throw;
    } catch (const Error& e) {
      throw TrainingError(std::string(branch) + " branch: " + e.what() + ", gradient norm " +
                          std::to_string(gradient_norm(model)));
    }
  };
  auto clean = guarded("clean", loss.lambda, loss.temperature, 0);
  report.clean = std::move(clean.loss);

  if (options.run_adversarial) {
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
      try {
        embeddings[i] += fgm_perturbation(clean.grad_embeddings[i], loss.radius);
      } catch (const Error& e) {
        throw TrainingError(std::string("adversarial branch: ") + e.what() + ", gradient norm " +
                            std::to_string(gradient_norm(model)));
      }
    }
    auto adv = guarded("adversarial", loss.lambda_adv, loss.temperature_adv, 1);
    report.adversarial = std::move(adv.loss);
  }
  report.total = sacl_loss(report.clean.total,
                           report.adversarial ? std::optional<double>(report.adversarial->total) : std::nullopt);
  report.grad_norm = gradient_norm(model);
  return report;
}

StepReport train_step(SentimentModel& model, AdamW& optimizer, std::span<const EncodedExample* const> batch,
                      const LossConfig& loss, double dropout, const StepOptions& options, long step_index) {
  model.zero_grad();
  StepReport report;
  try {
    report = accumulate_sacl_gradients(model, batch, loss, dropout, options);
  } catch (const TrainingError& e) {
    throw TrainingError("non-finite loss at step " + std::to_string(step_index) + ": " + e.what());
  }
  const bool clean_ok = std::isfinite(report.clean.total);
  const bool adv_ok = !report.adversarial || std::isfinite(report.adversarial->total);
  if (!clean_ok || !adv_ok || !std::isfinite(report.grad_norm)) {
    throw TrainingError("non-finite loss at step " + std::to_string(step_index) + " (branch " +
                        (clean_ok ? "adversarial" : "clean") + ", clean loss " +
                        std::to_string(report.clean.total) + ", gradient norm " +
                        std::to_string(report.grad_norm) + ")");
  }
  optimizer.step();
  return report;
}

// ---------------------------------------------------------------------------
// Early stopping
// ---------------------------------------------------------------------------

bool EarlyStopping::observe(double score) {
  ++epoch_;
  if (epoch_ == 1 || score > best_) {
    best_ = score;
    best_epoch_ = epoch_;
    since_improvement_ = 0;
    return true;
  }
  ++since_improvement_;
  return false;
}

// ---------------------------------------------------------------------------
// Training loops
// ---------------------------------------------------------------------------

std::vector<Polarity> majority_vote(const std::vector<std::vector<Polarity>>& predictions) {
  if (predictions.empty()) throw Error("majority_vote: no prediction sets");
  const auto n = predictions.front().size();
  for (const auto& p : predictions) {
    if (p.size() != n) throw Error("majority_vote: prediction sets differ in length");
  }
  std::vector<Polarity> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::array<int, kNumPolarities> votes{};
    for (const auto& p : predictions) ++votes[index_of(p[i])];
    int best = 0;
    for (int c = 1; c < kNumPolarities; ++c) {
      if (votes[c] > votes[best]) best = c;
    }
    out[i] = polarity_at(best);
  }
  return out;
}

std::vector<Polarity> predict_encoded(const std::vector<const SentimentModel*>& models,
                                      const std::vector<EncodedExample>& examples) {
  if (models.empty()) throw Error("predict: no models");
  std::vector<TokenSequence> tokens;
  tokens.reserve(examples.size());
  for (const auto& ex : examples) tokens.push_back(ex.tokens);
  std::vector<std::vector<Polarity>> all;
  for (const auto* m : models) all.push_back(m->predict(tokens));
  if (all.size() == 1) return std::move(all.front());
  return majority_vote(all);
}

FoldResult train_on(const std::vector<EncodedExample>& train, const std::vector<EncodedExample>& val,
                    const TrainConfig& config, const LabelWeights& weights, int fold_index,
                    const TrainHooks& hooks) {
  config.validate();
  if (train.empty()) throw Error("fold " + std::to_string(fold_index) + ": empty training partition");
  if (val.empty()) throw Error("fold " + std::to_string(fold_index) + ": empty validation partition");

  LossConfig loss = config.loss;
  loss.weights = weights;
  loss.validate();

  FoldResult result{fold_index, make_model(config), {}, 0, 0.0, {}, {}};
  SentimentModel& model = result.model;
  AdamW optimizer(model.parameters(), AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8, config.weight_decay});

  std::vector<Polarity> val_golds;
  for (const auto& ex : val) val_golds.push_back(ex.label);

  Rng rate_rng(derive_seed(config.seed, "adversarial-rate"));
  EarlyStopping stopper(config.patience);
  std::vector<Matrix> best_values;
  std::vector<std::size_t> order(train.size());
  long global_step = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(config.seed, "shuffle", {static_cast<std::uint64_t>(epoch)}));
    portable_shuffle(order.begin(), order.end(), shuffle_rng);

    EpochRecord rec;
    rec.epoch = epoch;
    double loss_sum = 0.0;
    std::vector<const EncodedExample*> batch;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batch.clear();
      const auto end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      for (auto i = start; i < end; ++i) batch.push_back(&train[order[i]]);
      StepOptions so;
      so.train_mode = true;
      so.dropout_seed = derive_seed(config.seed, "dropout", {static_cast<std::uint64_t>(global_step)});
      so.run_adversarial = uniform01(rate_rng) < loss.rate;
      const auto report = train_step(model, optimizer, batch, loss, config.dropout, so, global_step);
      loss_sum += report.total;
      ++rec.steps;
      if (report.adversarial) ++rec.adversarial_steps;
      ++global_step;
    }
    rec.train_loss = loss_sum / static_cast<double>(rec.steps);
    rec.val_weighted_f1 = weighted_f1(predict_encoded({&model}, val), val_golds);
    result.history.push_back(rec);

    const bool improved = stopper.observe(rec.val_weighted_f1);
    if (improved) best_values = model.snapshot();
    if (hooks.log) {
      std::ostringstream line;
      line << "fold " << fold_index + 1 << " epoch " << epoch << " loss " << rec.train_loss << " val_wf1 "
           << rec.val_weighted_f1 << " adv_steps " << rec.adversarial_steps << "/" << rec.steps
           << (improved ? " *" : "") << '\n';
      static std::mutex log_mutex;
      std::lock_guard lock(log_mutex);
      *hooks.log << line.str() << std::flush;
    }
    if (stopper.should_stop()) break;
  }

  model.restore(best_values);
  result.best_epoch = stopper.best_epoch();
  result.best_val_weighted_f1 = stopper.best_score();
  result.val_predictions = predict_encoded({&model}, val);
  result.val_golds = std::move(val_golds);
  return result;
}

FoldResult train_fold(const FoldSplit& fold, const Dataset& dataset, const LexiconSet& lexicons,
                      const TrainConfig& config, const LabelWeights& weights, const TrainHooks& hooks) {
  const auto tokenizer_model = make_model(config);
  const auto train = encode_dataset(subset(dataset, fold.train_ids), tokenizer_model.encoder(), lexicons, config);
  const auto val = encode_dataset(subset(dataset, fold.val_ids), tokenizer_model.encoder(), lexicons, config);
  return train_on(train, val, config, weights, fold.fold_index, hooks);
}

CvResult run_cv(const Dataset& dataset, const LexiconSet& lexicons, const TrainConfig& config,
                const CvOptions& options, const TrainHooks& hooks) {
  config.validate();
  const auto splits = stratified_kfold(dataset, config.folds, config.seed, config.stratify);
  CvResult cv;
  cv.weights = compute_label_weights(dataset);

  const auto tokenizer_model = make_model(config);
  const auto encoded = encode_dataset(dataset, tokenizer_model.encoder(), lexicons, config);
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < encoded.size(); ++i) by_id.emplace(encoded[i].id, i);
  auto gather = [&](const std::vector<std::string>& ids) {
    std::vector<EncodedExample> out;
    out.reserve(ids.size());
    for (const auto& id : ids) out.push_back(encoded[by_id.at(id)]);
    return out;
  };

  std::vector<int> fold_ids;
  for (const auto& s : splits) {
    if (!options.only_fold || *options.only_fold == s.fold_index) fold_ids.push_back(s.fold_index);
  }
  if (fold_ids.empty()) throw Error("run_cv: requested fold does not exist");

  auto run_one = [&](int f) {
    return train_on(gather(splits[f].train_ids), gather(splits[f].val_ids), config, cv.weights, f, hooks);
  };

  const auto width = static_cast<std::size_t>(std::max(1, options.parallel_folds));
  for (std::size_t start = 0; start < fold_ids.size(); start += width) {
    const auto end = std::min(fold_ids.size(), start + width);
    if (end - start == 1) {
      cv.folds.push_back(run_one(fold_ids[start]));
      continue;
    }
    std::vector<std::future<FoldResult>> jobs;
    for (auto i = start; i < end; ++i) jobs.push_back(std::async(std::launch::async, run_one, fold_ids[i]));
    for (auto& j : jobs) cv.folds.push_back(j.get());
  }

  for (const auto& f : cv.folds) cv.val_weighted_f1.push_back(f.best_val_weighted_f1);
  cv.mean_val_weighted_f1 = std::accumulate(cv.val_weighted_f1.begin(), cv.val_weighted_f1.end(), 0.0) /
                            static_cast<double>(cv.val_weighted_f1.size());
  return cv;
}

}  // namespace sacl
