#include "sacl/run.hpp"

#include "sacl/config.hpp"
#include "sacl/report.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace sacl {

namespace {

std::string to_hex(const unsigned char* data, unsigned int len) {
  std::ostringstream ss;
  for (unsigned int i = 0; i < len; ++i) ss << std::hex << std::setw(2) << std::setfill('0') << int(data[i]);
  return ss.str();
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  return to_hex(digest, len);
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_text_file(path)); }

std::filesystem::path runs_root() {
  if (const char* env = std::getenv("SACL_RUNS_DIR"); env && *env) return env;
  return "runs";
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

nlohmann::json RunManifest::to_json() const {
  return {{"command", command},
          {"arguments", arguments},
          {"config", config},
          {"input_digests", input_digests},
          {"seed", seed},
          {"artifact_version", artifact_version},
          {"training_languages", training_languages},
          {"lexicons", lexicons}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.arguments = j.at("arguments").get<std::vector<std::string>>();
  m.config = j.at("config").get<std::map<std::string, std::string>>();
  m.input_digests = j.at("input_digests").get<std::map<std::string, std::string>>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.artifact_version = j.at("artifact_version").get<std::string>();
  m.training_languages = j.at("training_languages").get<std::set<std::string>>();
  m.lexicons = j.value("lexicons", std::map<std::string, std::string>{});
  return m;
}

std::filesystem::path fold_dir(const std::filesystem::path& run_dir, int fold_index) {
  return run_dir / ("fold" + std::to_string(fold_index + 1));
}

std::vector<SentimentModel> load_run_models(const std::filesystem::path& run_dir, std::optional<int> only_fold) {
  if (!std::filesystem::is_directory(run_dir)) throw Error("run directory not found: " + run_dir.string());
  std::vector<int> indices;
  for (const auto& entry : std::filesystem::directory_iterator(run_dir)) {
    const auto name = entry.path().filename().string();
    if (!entry.is_directory() || name.rfind("fold", 0) != 0) continue;
    int number = 0;
    const auto digits = std::string_view(name).substr(4);
    const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), number);
    if (res.ec != std::errc{} || res.ptr != digits.data() + digits.size() || number < 1) continue;
    if (std::filesystem::exists(entry.path() / "checkpoint.bin")) indices.push_back(number - 1);
  }
  std::sort(indices.begin(), indices.end());
  std::vector<SentimentModel> models;
  for (int f : indices) {
    if (only_fold && *only_fold != f) continue;
    models.push_back(load_checkpoint(fold_dir(run_dir, f) / "checkpoint.bin"));
  }
  if (models.empty()) throw Error(run_dir.string() + ": no fold checkpoints found");
  return models;
}

RunManifest load_manifest(const std::filesystem::path& run_dir) {
  return RunManifest::from_json(nlohmann::json::parse(read_text_file(run_dir / "manifest.json")));
}

TrainConfig load_run_config(const std::filesystem::path& run_dir) {
  TrainConfig config;
  apply_config_file(config, run_dir / "config.txt");
  return config;
}

nlohmann::json fold_metrics_json(const FoldResult& fold, const TrainConfig& config) {
  auto report = make_report(fold.val_predictions, fold.val_golds, kSubtaskValidation, "all",
                            config_fingerprint(config), config.seed);
  auto j = report.to_json();
  j["fold"] = fold.fold_index + 1;
  j["best_epoch"] = fold.best_epoch;
  j["history"] = nlohmann::json::array();
  for (const auto& e : fold.history) {
    j["history"].push_back({{"epoch", e.epoch},
                            {"train_loss", e.train_loss},
                            {"val_weighted_f1", e.val_weighted_f1},
                            {"steps", e.steps},
                            {"adversarial_steps", e.adversarial_steps}});
  }
  return j;
}

void save_cv_run(const std::filesystem::path& run_dir, CvResult& cv, const TrainConfig& config,
                 const RunManifest& manifest) {
  std::filesystem::create_directories(run_dir);
  write_text_file(run_dir / "manifest.json", dump_json(manifest.to_json()));
  write_text_file(run_dir / "config.txt", serialize_config(config));

  nlohmann::json summary;
  summary["config_hash"] = config_fingerprint(config);
  summary["seed"] = config.seed;
  summary["training_languages"] = manifest.training_languages;
  summary["folds"] = nlohmann::json::array();
  for (auto& fold : cv.folds) {
    const auto dir = fold_dir(run_dir, fold.fold_index);
    std::filesystem::create_directories(dir);
    save_checkpoint(fold.model, dir / "checkpoint.bin");
    write_text_file(dir / "metrics.json", dump_json(fold_metrics_json(fold, config)));
    std::string log;
    for (const auto& e : fold.history) {
      log += "epoch " + std::to_string(e.epoch) + " train_loss " + format_double(e.train_loss) + " val_wf1 " +
             format_double(e.val_weighted_f1) + " adversarial_steps " + std::to_string(e.adversarial_steps) + "/" +
             std::to_string(e.steps) + (e.epoch == fold.best_epoch ? " best" : "") + "\n";
    }
    write_text_file(dir / "log.txt", log);
    summary["folds"].push_back({{"fold", fold.fold_index + 1},
                                {"best_epoch", fold.best_epoch},
                                {"val_weighted_f1", fold.best_val_weighted_f1}});
  }
  summary["mean_val_weighted_f1"] = cv.mean_val_weighted_f1;
  write_text_file(run_dir / "summary.json", dump_json(summary));
}

}  // namespace sacl
