#pragma once

#include "sacl/report.hpp"
#include "sacl/trainer.hpp"

#include <set>
#include <string>
#include <vector>

namespace sacl {

struct EvalResult {
  MetricsReport report;
  std::vector<std::string> ids;
  std::vector<Polarity> predictions;
  std::vector<std::string> warnings;
};

/// Predicts `target` with one model or a fold ensemble (majority vote) and
/// scores it. No parameters change.
///
/// The report is tagged zero-shot only when none of the target languages is
/// in `training_languages`; otherwise a warning is recorded and the tag falls
/// back to multilingual (or an Error is thrown when `strict`).
EvalResult zero_shot_eval(const std::vector<const SentimentModel*>& models, const Dataset& target,
                          const std::set<std::string>& training_languages, const LexiconSet& lexicons,
                          const TrainConfig& config, bool strict = false);

/// Plain scoring of `eval` with a given subtask tag.
EvalResult evaluate(const std::vector<const SentimentModel*>& models, const Dataset& eval,
                    const LexiconSet& lexicons, const TrainConfig& config, std::string subtask,
                    std::string variant = {});

/// `id<TAB>label` lines with a header row.
std::string render_predictions(const std::vector<std::string>& ids, const std::vector<Polarity>& predictions);

// ---------------------------------------------------------------------------
// Ablation grid
// ---------------------------------------------------------------------------

inline constexpr std::array<const char*, 4> kAblationVariants = {"full", "no_lexicon", "no_sacl",
                                                                 "no_lexicon_no_sacl"};

/// Configuration of one grid cell: "no_lexicon" turns the prefix off,
/// "no_sacl" sets lambda = lambda_adv = 0 and disables the adversarial branch
/// (radius 0, rate 0), and "no_lexicon_no_sacl" does both, leaving plain
/// class-weighted CE fine-tuning.
TrainConfig ablation_config(const TrainConfig& base, std::string_view variant);

struct AblationRun {
  std::string variant;
  TrainConfig config;
  CvResult cv;
  MetricsReport report;
};

/// Trains the four grid configurations with run_cv and scores each fold
/// ensemble on `eval`.
std::vector<AblationRun> ablation_grid(const Dataset& train, const Dataset& eval, const LexiconSet& lexicons,
                                       const TrainConfig& base, const CvOptions& options = {},
                                       const TrainHooks& hooks = {});

}  // namespace sacl
