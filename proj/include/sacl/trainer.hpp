#pragma once

#include "sacl/data.hpp"
#include "sacl/lexicon_prefix.hpp"
#include "sacl/model.hpp"
#include "sacl/optimizer.hpp"

#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace sacl {

struct TrainConfig {
  int epochs = 10;
  int patience = 3;
  int batch_size = 128;
  double learning_rate = 1e-5;
  double weight_decay = 1e-2;
  double dropout = 0.2;
  int max_len = kMaxTokens;
  std::uint64_t seed = 0;
  LossConfig loss;
  CompactEncoderConfig encoder;
  bool use_lexicon = true;
  int max_prefix_tokens = kDefaultPrefixTokens;
  int folds = 5;
  StratifyBy stratify = StratifyBy::label;

  void validate() const;
  /// lambda == 0 and no adversarial branch: the objective is plain weighted CE.
  bool sacl_disabled() const { return loss.lambda == 0.0 && loss.rate == 0.0; }
};

/// Lexicon matchers keyed by language code.
using LexiconSet = std::map<std::string, LexiconMatcher>;

struct EncodedExample {
  std::string id;
  std::string language;
  Polarity label = Polarity::neutral;
  TokenSequence tokens;
};

/// Composes (optionally lexicon-prefixed) inputs and tokenizes them. Examples
/// whose language has no lexicon, or all examples when use_lexicon is off,
/// get the plain single-segment layout.
std::vector<EncodedExample> encode_dataset(const Dataset& dataset, const Encoder& encoder,
                                           const LexiconSet& lexicons, const TrainConfig& config);

SentimentModel make_model(const TrainConfig& config);

// ---------------------------------------------------------------------------
// One optimization step
// ---------------------------------------------------------------------------

struct StepOptions {
  bool train_mode = true;  // dropout on
  std::uint64_t dropout_seed = 0;
  bool run_adversarial = true;
};

struct StepReport {
  SoftSclValue clean;
  std::optional<SoftSclValue> adversarial;
  double total = 0.0;
  double grad_norm = 0.0;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Accumulates the SACL gradient for one batch into the model's parameter
/// gradients (the caller zeroes them first):
///   1. forward/backward of the soft-SCL loss on the clean embeddings;
///   2. when run_adversarial: r_i = fgm(dL/d emb_i, radius) from step 1,
///      forward/backward of the soft-SCL loss (lambda_adv, tau_adv) on
///      emb_i + r_i, accumulating into the same gradients.
/// The perturbation is never written back into any parameter.
StepReport accumulate_sacl_gradients(SentimentModel& model, std::span<const EncodedExample* const> batch,
                                     const LossConfig& loss, double dropout, const StepOptions& options);

/// zero_grad, accumulate, non-finite check, optimizer update.
StepReport train_step(SentimentModel& model, AdamW& optimizer, std::span<const EncodedExample* const> batch,
                      const LossConfig& loss, double dropout, const StepOptions& options, long step_index = 0);

// ---------------------------------------------------------------------------
// Epoch loop, early stopping and cross-validation
// ---------------------------------------------------------------------------

class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  /// Records one epoch's validation score; returns true when it improved.
  bool observe(double score);
  bool should_stop() const { return since_improvement_ >= patience_; }
  int best_epoch() const { return best_epoch_; }
  double best_score() const { return best_; }
  int epochs_since_improvement() const { return since_improvement_; }

 private:
  int patience_;
  int epoch_ = 0;
  int best_epoch_ = 0;
  int since_improvement_ = 0;
  double best_ = -1.0;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_weighted_f1 = 0.0;
  long steps = 0;
  long adversarial_steps = 0;
};

struct FoldResult {
  int fold_index = 0;
  SentimentModel model;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_weighted_f1 = 0.0;
  std::vector<Polarity> val_predictions;
  std::vector<Polarity> val_golds;
};

struct TrainHooks {
  std::ostream* log = nullptr;
};

FoldResult train_fold(const FoldSplit& fold, const Dataset& dataset, const LexiconSet& lexicons,
                      const TrainConfig& config, const LabelWeights& weights, const TrainHooks& hooks = {});

/// Same as train_fold on pre-encoded partitions.
FoldResult train_on(const std::vector<EncodedExample>& train, const std::vector<EncodedExample>& val,
                    const TrainConfig& config, const LabelWeights& weights, int fold_index = 0,
                    const TrainHooks& hooks = {});

struct CvOptions {
  std::optional<int> only_fold;  // train a single fold (e.g. fold 0 for the "fold1" variant)
  int parallel_folds = 1;
};

struct CvResult {
  std::vector<FoldResult> folds;
  std::vector<double> val_weighted_f1;
  double mean_val_weighted_f1 = 0.0;
  LabelWeights weights;
};

/// Stratified k-fold training. Label weights come from the whole dataset
/// (train and validation together); every fold starts from the same seed.
CvResult run_cv(const Dataset& dataset, const LexiconSet& lexicons, const TrainConfig& config,
                const CvOptions& options = {}, const TrainHooks& hooks = {});

/// Per-sample majority vote; ties resolved toward the earliest category.
std::vector<Polarity> majority_vote(const std::vector<std::vector<Polarity>>& predictions);

/// Predictions of one model, or the vote of several, on encoded examples.
std::vector<Polarity> predict_encoded(const std::vector<const SentimentModel*>& models,
                                      const std::vector<EncodedExample>& examples);

}  // namespace sacl
