#include "sacl/evaluation.hpp"

#include "sacl/config.hpp"

namespace sacl {

namespace {

std::string joined_languages(const Dataset& ds) {
  std::vector<std::string> langs(ds.languages.begin(), ds.languages.end());
  std::sort(langs.begin(), langs.end(), [](const std::string& a, const std::string& b) {
    return std::make_pair(language_rank(a), a) < std::make_pair(language_rank(b), b);
  });
  std::string out;
  for (const auto& l : langs) out += (out.empty() ? "" : "+") + l;
  return out;
}

}  // namespace

EvalResult evaluate(const std::vector<const SentimentModel*>& models, const Dataset& eval,
                    const LexiconSet& lexicons, const TrainConfig& config, std::string subtask,
                    std::string variant) {
  if (eval.empty()) throw Error("evaluation set is empty");
  if (models.empty()) throw Error("evaluation needs at least one model");
  const auto encoded = encode_dataset(eval, models.front()->encoder(), lexicons, config);
  EvalResult out;
  out.predictions = predict_encoded(models, encoded);
  std::vector<Polarity> golds;
  for (const auto& ex : eval.examples) {
    out.ids.push_back(ex.id);
    golds.push_back(ex.label);
  }
  out.report = make_report(out.predictions, golds, std::move(subtask), joined_languages(eval),
                           config_fingerprint(config), config.seed, std::move(variant));
  return out;
}

EvalResult zero_shot_eval(const std::vector<const SentimentModel*>& models, const Dataset& target,
                          const std::set<std::string>& training_languages, const LexiconSet& lexicons,
                          const TrainConfig& config, bool strict) {
  if (target.empty()) throw Error("zero-shot target set is empty");
  std::vector<std::string> seen;
  for (const auto& lang : target.languages) {
    if (training_languages.count(lang)) seen.push_back(lang);
  }
  if (!seen.empty() && strict) {
    throw Error("zero-shot target language '" + seen.front() + "' was used for training");
  }
  auto result = evaluate(models, target, lexicons, config, seen.empty() ? kSubtaskZeroShot : kSubtaskMultilingual);
  for (const auto& lang : seen) {
    result.warnings.push_back("target language '" + lang +
                              "' appears in the training languages; report is not zero-shot");
  }
  return result;
}

std::string render_predictions(const std::vector<std::string>& ids, const std::vector<Polarity>& predictions) {
  if (ids.size() != predictions.size()) throw Error("render_predictions: length mismatch");
  std::string out = "ID\tlabel\n";
  for (std::size_t i = 0; i < ids.size(); ++i) out += ids[i] + "\t" + std::string(to_string(predictions[i])) + "\n";
  return out;
}

TrainConfig ablation_config(const TrainConfig& base, std::string_view variant) {
  TrainConfig c = base;
  const bool drop_lexicon = variant == "no_lexicon" || variant == "no_lexicon_no_sacl";
  const bool drop_sacl = variant == "no_sacl" || variant == "no_lexicon_no_sacl";
  if (!drop_lexicon && !drop_sacl && variant != "full") {
    throw Error("unknown ablation variant '" + std::string(variant) + "'");
  }
  if (drop_lexicon) c.use_lexicon = false;
  if (drop_sacl) {
    c.loss.lambda = 0.0;
    c.loss.lambda_adv = 0.0;
    c.loss.radius = 0.0;
    c.loss.rate = 0.0;
  }
  return c;
}

std::vector<AblationRun> ablation_grid(const Dataset& train, const Dataset& eval, const LexiconSet& lexicons,
                                       const TrainConfig& base, const CvOptions& options, const TrainHooks& hooks) {
  std::set<std::string> train_langs = train.languages;
  bool disjoint = true;
  for (const auto& l : eval.languages) disjoint = disjoint && !train_langs.count(l);

  std::vector<AblationRun> runs;
  for (const char* variant : kAblationVariants) {
    auto config = ablation_config(base, variant);
    auto cv = run_cv(train, lexicons, config, options, hooks);
    std::vector<const SentimentModel*> models;
    for (const auto& f : cv.folds) models.push_back(&f.model);
    auto eval_result = evaluate(models, eval, lexicons, config,
                                disjoint ? kSubtaskZeroShot : kSubtaskMultilingual, variant);
    runs.push_back({variant, config, std::move(cv), std::move(eval_result.report)});
  }
  return runs;
}

}  // namespace sacl
