#include "sacl/config.hpp"
#include "sacl/data.hpp"
#include "sacl/evaluation.hpp"
#include "sacl/report.hpp"
#include "sacl/run.hpp"
#include "sacl/synthetic.hpp"
#include "sacl/text.hpp"
#include "sacl/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fs = std::filesystem;
using namespace sacl;

namespace {

struct InputSpec {
  std::string language;
  fs::path path;
};

// "[LANG=]PATH"; without LANG the language is the file stem up to its last '_'
// (hau_train.tsv -> hau, pt-MZ_dev.tsv -> pt-MZ).
InputSpec parse_input(const std::string& arg) {
  InputSpec spec;
  auto eq = arg.find('=');
  if (eq != std::string::npos && eq > 0 && arg.find('/') > eq) {
    spec.language = arg.substr(0, eq);
    spec.path = arg.substr(eq + 1);
  } else {
    spec.path = arg;
    auto stem = spec.path.stem().string();
    auto cut = stem.rfind('_');
    spec.language = cut == std::string::npos ? stem : stem.substr(0, cut);
  }
  if (spec.language.empty()) throw Error("cannot infer a language code from '" + arg + "'; use LANG=PATH");
  return spec;
}

struct DataOptions {
  std::vector<std::string> inputs;
  std::string id_col = "ID";
  std::string text_col = "tweet";
  std::string label_col = "label";
  std::string lang_col;

  ColumnMap columns() const { return {id_col, text_col, label_col, lang_col}; }
};

void add_column_flags(CLI::App* cmd, DataOptions& d) {
  cmd->add_option("--id-column", d.id_col, "Header of the id column")->capture_default_str();
  cmd->add_option("--text-column", d.text_col, "Header of the text column")->capture_default_str();
  cmd->add_option("--label-column", d.label_col, "Header of the label column")->capture_default_str();
  cmd->add_option("--language-column", d.lang_col, "Read the language per row from this column");
}

Dataset load_inputs(const std::vector<std::string>& inputs, const ColumnMap& columns,
                    std::map<std::string, std::string>& digests) {
  std::vector<Dataset> parts;
  for (const auto& arg : inputs) {
    auto spec = parse_input(arg);
    parts.push_back(load_dataset(spec.path, spec.language, columns));
    digests[spec.path.string()] = sha256_file(spec.path);
  }
  return combine_multilingual(parts);
}

LexiconSet load_lexicons(const std::vector<std::string>& inputs, std::map<std::string, std::string>& paths,
                         std::map<std::string, std::string>& digests) {
  LexiconSet set;
  for (const auto& arg : inputs) {
    auto spec = parse_input(arg);
    set.emplace(spec.language, LexiconMatcher(load_lexicon(spec.path, spec.language)));
    paths[spec.language] = spec.path.string();
    digests[spec.path.string()] = sha256_file(spec.path);
  }
  return set;
}

// Hyperparameter flags; each maps onto a config key.
const std::vector<std::pair<std::string, std::string>> kConfigFlags = {
    {"--epochs", "number_of_epochs"},
    {"--patience", "patience"},
    {"--batch-size", "batch_size"},
    {"--lr", "learning_rate"},
    {"--weight-decay", "weight_decay"},
    {"--dropout", "dropout"},
    {"--max-len", "maximum_token_length"},
    {"--lambda", "trade_off_weight"},
    {"--lambda-adv", "trade_off_weight_adv"},
    {"--temperature", "temperature"},
    {"--temperature-adv", "temperature_adv"},
    {"--fgm-radius", "perturbation_radius"},
    {"--fgm-rate", "perturbation_rate"},
    {"--folds", "folds"},
    {"--hidden-size", "hidden_size"},
    {"--num-layers", "num_layers"},
    {"--num-heads", "num_heads"},
    {"--ffn-size", "ffn_size"},
    {"--vocab-size", "vocab_size"},
    {"--max-prefix-tokens", "max_prefix_tokens"},
    {"--reduction", "reduction"},
    {"--positives", "positives"},
    {"--stratify", "stratify"},
};

struct TrainOptions {
  DataOptions data;
  std::vector<std::string> lexicons;
  std::vector<std::string> tests;
  std::string config_file;
  std::vector<std::string> settings;
  std::map<std::string, std::string> flag_values;
  bool no_lexicon = false;
  std::optional<std::uint64_t> seed;
  std::string run_id;
  std::optional<int> fold;
  int parallel_folds = 1;
  bool quiet = false;
};

void add_train_flags(CLI::App* cmd, TrainOptions& o) {
  cmd->add_option("--train", o.data.inputs, "Training TSV as [LANG=]PATH (repeatable)")->required();
  cmd->add_option("--lexicon", o.lexicons, "Lexicon TSV as [LANG=]PATH (repeatable)");
  cmd->add_option("--config", o.config_file, "key=value config file");
  cmd->add_option("--set", o.settings, "Config override key=value (repeatable)");
  for (const auto& [flag, key] : kConfigFlags) {
    cmd->add_option_function<std::string>(
        flag, [&o, key = key](const std::string& v) { o.flag_values[key] = v; }, "Sets " + key);
  }
  cmd->add_flag("--no-lexicon", o.no_lexicon, "Train and predict without the lexicon prefix");
  cmd->add_option("--seed", o.seed, "Global seed");
  cmd->add_option("--run-id", o.run_id, "Run directory name under the runs root");
  cmd->add_option("--fold", o.fold, "Train only this fold (1-based)")->check(CLI::PositiveNumber);
  cmd->add_option("--parallel-folds", o.parallel_folds, "Number of folds trained concurrently")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--quiet", o.quiet, "No progress output");
  add_column_flags(cmd, o.data);
}

// Precedence: defaults < --config file < --set < named flags < --no-lexicon / --seed.
TrainConfig resolve_config(const TrainOptions& o) {
  TrainConfig config;
  if (!o.config_file.empty()) apply_config_file(config, o.config_file);
  for (const auto& s : o.settings) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    apply_setting(config, text::trim(s.substr(0, eq)), text::trim(s.substr(eq + 1)));
  }
  for (const auto& [key, value] : o.flag_values) apply_setting(config, key, value);
  if (o.no_lexicon) config.use_lexicon = false;
  if (o.seed) config.seed = *o.seed;
  config.validate();
  return config;
}

std::vector<std::string> g_arguments;

RunManifest base_manifest(const std::string& command, const TrainConfig& config) {
  RunManifest m;
  m.command = command;
  m.arguments = g_arguments;
  m.config = config_to_map(config);
  m.seed = config.seed;
  return m;
}

std::string language_label(const Dataset& ds) {
  std::string out;
  for (const auto& l : ds.languages) out += (out.empty() ? "" : "+") + l;
  return out;
}

void write_eval(const fs::path& dir, const EvalResult& result) {
  fs::create_directories(dir);
  write_text_file(dir / "metrics.json", dump_json(result.report.to_json()));
  write_text_file(dir / "predictions.tsv", render_predictions(result.ids, result.predictions));
  write_text_file(dir / "summary.md", render_summary({result.report}));
}

std::vector<const SentimentModel*> model_ptrs(const std::vector<FoldResult>& folds) {
  std::vector<const SentimentModel*> out;
  for (const auto& f : folds) out.push_back(&f.model);
  return out;
}

// ---------------------------------------------------------------------------

struct SplitsOptions {
  DataOptions data;
  int k = 5;
  std::uint64_t seed = 0;
  std::string stratify = "label";
  std::string out = "folds.json";
};

int cmd_splits(const SplitsOptions& o) {
  std::map<std::string, std::string> digests;
  auto dataset = load_inputs(o.data.inputs, o.data.columns(), digests);
  TrainConfig probe;
  apply_setting(probe, "stratify", o.stratify);
  auto folds = stratified_kfold(dataset, o.k, o.seed, probe.stratify);

  nlohmann::json j;
  j["k"] = o.k;
  j["seed"] = o.seed;
  j["stratify"] = o.stratify;
  j["input_digests"] = digests;
  j["artifact_version"] = kArtifactVersion;
  j["folds"] = nlohmann::json::array();
  for (const auto& f : folds) {
    j["folds"].push_back({{"fold", f.fold_index + 1}, {"train_ids", f.train_ids}, {"val_ids", f.val_ids}});
  }
  write_text_file(o.out, dump_json(j));
  std::cout << "wrote " << folds.size() << "-fold manifest to " << o.out << "\n";
  return 0;
}

int cmd_train(const TrainOptions& o) {
  auto config = resolve_config(o);
  auto manifest = base_manifest("train", config);
  auto dataset = load_inputs(o.data.inputs, o.data.columns(), manifest.input_digests);
  auto lexicons = load_lexicons(o.lexicons, manifest.lexicons, manifest.input_digests);
  manifest.training_languages = dataset.languages;

  std::vector<std::pair<std::string, Dataset>> tests;
  for (const auto& arg : o.tests) {
    auto spec = parse_input(arg);
    tests.emplace_back(spec.language, load_dataset(spec.path, spec.language, o.data.columns()));
    manifest.input_digests[spec.path.string()] = sha256_file(spec.path);
  }

  std::string run_id = o.run_id.empty()
                           ? "train-" + config_fingerprint(config) + "-seed" + std::to_string(config.seed)
                           : o.run_id;
  auto run_dir = runs_root() / run_id;

  CvOptions cv_options;
  if (o.fold) cv_options.only_fold = *o.fold - 1;
  cv_options.parallel_folds = o.parallel_folds;
  TrainHooks hooks;
  if (!o.quiet) hooks.log = &std::cerr;

  auto cv = run_cv(dataset, lexicons, config, cv_options, hooks);
  save_cv_run(run_dir, cv, config, manifest);

  for (const auto& [lang, test] : tests) {
    auto result = evaluate(model_ptrs(cv.folds), test, lexicons, config, kSubtaskMultilingual);
    write_eval(run_dir / "test" / lang, result);
    std::cout << "test " << lang << " weighted_f1 " << format_double(result.report.weighted_f1()) << "\n";
  }
  std::cout << "mean validation weighted_f1 " << format_double(cv.mean_val_weighted_f1) << "\n";
  std::cout << "run directory " << run_dir.string() << "\n";
  return 0;
}

struct ZeroShotOptions {
  std::string run_dir;
  DataOptions data;
  std::vector<std::string> lexicons;
  std::optional<int> fold;
  bool strict = false;
  std::string out;
};

int cmd_zeroshot(const ZeroShotOptions& o) {
  fs::path run_dir = o.run_dir;
  if (!fs::is_directory(run_dir)) throw Error("run directory not found: " + run_dir.string());
  auto stored = load_manifest(run_dir);
  auto config = load_run_config(run_dir);
  std::optional<int> only_fold;
  if (o.fold) only_fold = *o.fold - 1;
  auto models = load_run_models(run_dir, only_fold);
  std::vector<const SentimentModel*> ptrs;
  for (const auto& m : models) ptrs.push_back(&m);

  std::map<std::string, std::string> lexicon_paths, digests;
  std::vector<std::string> lexicon_args = o.lexicons;
  if (lexicon_args.empty()) {
    for (const auto& [lang, path] : stored.lexicons) lexicon_args.push_back(lang + "=" + path);
  }

  auto lexicons = load_lexicons(lexicon_args, lexicon_paths, digests);

  fs::path out_root = o.out.empty() ? run_dir / "zeroshot" : fs::path(o.out);
  for (const auto& arg : o.data.inputs) {
    auto spec = parse_input(arg);
    auto target = load_dataset(spec.path, spec.language, o.data.columns());
    auto result = zero_shot_eval(ptrs, target, stored.training_languages, lexicons, config, o.strict);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    auto dir = out_root / language_label(target);
    write_eval(dir, result);
    std::cout << result.report.subtask << " " << result.report.language << " weighted_f1 "
              << format_double(result.report.weighted_f1()) << " -> " << dir.string() << "\n";
  }
  return 0;
}

struct AblateOptions {
  TrainOptions train;
  std::vector<std::string> evals;
};

int cmd_ablate(const AblateOptions& o) {
  auto base = resolve_config(o.train);
  auto manifest = base_manifest("ablate", base);
  auto dataset = load_inputs(o.train.data.inputs, o.train.data.columns(), manifest.input_digests);
  auto lexicons = load_lexicons(o.train.lexicons, manifest.lexicons, manifest.input_digests);
  auto eval = load_inputs(o.evals, o.train.data.columns(), manifest.input_digests);
  manifest.training_languages = dataset.languages;

  std::string run_id = o.train.run_id.empty()
                           ? "ablate-" + config_fingerprint(base) + "-seed" + std::to_string(base.seed)
                           : o.train.run_id;
  auto root = runs_root() / run_id;
  write_text_file(root / "manifest.json", dump_json(manifest.to_json()));

  bool disjoint = true;
  for (const auto& l : eval.languages) disjoint = disjoint && !dataset.languages.count(l);

  CvOptions cv_options;
  if (o.train.fold) cv_options.only_fold = *o.train.fold - 1;
  cv_options.parallel_folds = o.train.parallel_folds;
  TrainHooks hooks;
  if (!o.train.quiet) hooks.log = &std::cerr;

  std::vector<MetricsReport> reports;
  for (const char* variant : kAblationVariants) {
    auto config = ablation_config(base, variant);
    if (hooks.log) *hooks.log << "== " << variant << " (" << config_fingerprint(config) << ")\n";
    auto cv = run_cv(dataset, lexicons, config, cv_options, hooks);
    auto sub = root / variant;
    auto sub_manifest = manifest;
    sub_manifest.config = config_to_map(config);
    save_cv_run(sub, cv, config, sub_manifest);
    auto result = evaluate(model_ptrs(cv.folds), eval, lexicons, config,
                           disjoint ? kSubtaskZeroShot : kSubtaskMultilingual, variant);
    write_eval(sub / "eval", result);
    std::cout << variant << " " << config_fingerprint(config) << " weighted_f1 "
              << format_double(result.report.weighted_f1()) << "\n";
    reports.push_back(result.report);
  }
  emit_report(reports, root / "report");
  std::cout << "run directory " << root.string() << "\n";
  return 0;
}

struct ReportOptions {
  std::vector<std::string> paths;
  std::string out;
  bool with_validation = false;
};

int cmd_report(const ReportOptions& o) {
  std::vector<fs::path> files;
  for (const auto& p : o.paths) {
    fs::path path = p;
    if (fs::is_regular_file(path)) {
      files.push_back(path);
    } else if (fs::is_directory(path)) {
      for (const auto& entry : fs::recursive_directory_iterator(path)) {
        if (entry.is_regular_file() && entry.path().filename() == "metrics.json") files.push_back(entry.path());
      }
    }
  }
  std::sort(files.begin(), files.end());

  std::vector<MetricsReport> reports;
  for (const auto& f : files) {
    auto report = MetricsReport::from_json(nlohmann::json::parse(read_text_file(f)));
    if (report.subtask == kSubtaskValidation && !o.with_validation) continue;
    reports.push_back(std::move(report));
  }
  if (reports.empty()) {
    std::string where;
    for (const auto& p : o.paths) where += " " + p;
    throw Error("no metrics.json reports found under" + (where.empty() ? std::string(" (no paths)") : where));
  }
  sort_reports(reports);
  std::cout << render_summary(reports);
  if (!o.out.empty()) emit_report(reports, o.out);
  return 0;
}

struct SynthOptions {
  std::string out;
  SyntheticOptions synth;
};

int cmd_synth(const SynthOptions& o) {
  fs::path out = o.out;
  for (const auto& lang : make_synthetic_languages(o.synth)) {
    save_dataset(lang.train, out / (lang.code + "_train.tsv"));
    save_dataset(lang.test, out / (lang.code + "_test.tsv"));
    std::string lex;
    for (const auto& e : lang.lexicon.entries) lex += e.phrase + "\t" + std::string(to_string(e.polarity)) + "\n";
    write_text_file(out / (lang.code + "_lexicon.tsv"), lex);
  }
  std::cout << "wrote " << o.synth.languages.size() << " synthetic languages to " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) g_arguments.emplace_back(argv[i]);

  CLI::App app{"Lexicon-prefixed SACL sentiment classifier"};
  app.require_subcommand(1);

  SplitsOptions splits;
  auto* splits_cmd = app.add_subcommand("splits", "Write a stratified k-fold manifest");
  splits_cmd->add_option("--train", splits.data.inputs, "Dataset TSV as [LANG=]PATH (repeatable)")->required();
  splits_cmd->add_option("--k", splits.k, "Number of folds")->capture_default_str();
  splits_cmd->add_option("--seed", splits.seed, "Seed")->capture_default_str();
  splits_cmd->add_option("--stratify", splits.stratify, "label or language_label")->capture_default_str();
  splits_cmd->add_option("--out", splits.out, "Output file")->capture_default_str();
  add_column_flags(splits_cmd, splits.data);

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Cross-validated training into a run directory");
  add_train_flags(train_cmd, train);
  train_cmd->add_option("--test", train.tests, "Test TSV as [LANG=]PATH scored with the fold ensemble");

  ZeroShotOptions zs;
  auto* zs_cmd = app.add_subcommand("zeroshot", "Score a trained run on unseen languages");
  zs_cmd->add_option("--run", zs.run_dir, "Run directory")->required();
  zs_cmd->add_option("--target", zs.data.inputs, "Target TSV as [LANG=]PATH (repeatable)")->required();
  zs_cmd->add_option("--lexicon", zs.lexicons, "Lexicon as [LANG=]PATH; defaults to the run's lexicons");
  zs_cmd->add_option("--fold", zs.fold, "Use a single fold model (1-based)")->check(CLI::PositiveNumber);
  zs_cmd->add_flag("--strict", zs.strict, "Fail when a target language was used for training");
  zs_cmd->add_option("--out", zs.out, "Output root (default <run>/zeroshot)");
  add_column_flags(zs_cmd, zs.data);

  AblateOptions ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "Train and score the four lexicon/SACL configurations");
  add_train_flags(ablate_cmd, ablate.train);
  ablate_cmd->add_option("--eval", ablate.evals, "Evaluation TSV as [LANG=]PATH (repeatable)")->required();

  ReportOptions report;
  auto* report_cmd = app.add_subcommand("report", "Merge metrics.json files into one table");
  report_cmd->add_option("paths", report.paths, "Run directories or metrics.json files");
  report_cmd->add_option("--out", report.out, "Also write scores.json, summary.md and confusion tables here");
  report_cmd->add_flag("--with-validation", report.with_validation, "Include per-fold validation reports");

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic toy corpus with lexicons");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--seed", synth.synth.seed, "Seed")->capture_default_str();
  synth_cmd->add_option("--languages", synth.synth.languages, "Language codes")->delimiter(',');
  synth_cmd->add_option("--train-per-language", synth.synth.train_per_language)->capture_default_str();
  synth_cmd->add_option("--test-per-language", synth.synth.test_per_language)->capture_default_str();
  synth_cmd->add_option("--lexicon-coverage", synth.synth.lexicon_coverage)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*splits_cmd) return cmd_splits(splits);
    if (*train_cmd) return cmd_train(train);
    if (*zs_cmd) return cmd_zeroshot(zs);
    if (*ablate_cmd) return cmd_ablate(ablate);
    if (*report_cmd) return cmd_report(report);
    if (*synth_cmd) return cmd_synth(synth);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
