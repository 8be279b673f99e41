#pragma once

#include "sacl/trainer.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace sacl {

inline constexpr const char* kArtifactVersion = "1.0.0";

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// $SACL_RUNS_DIR, or "runs" when unset.
std::filesystem::path runs_root();

/// Writes `content` exactly; throws Error on failure.
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

/// Pretty-printed JSON with sorted keys and a trailing newline.
std::string dump_json(const nlohmann::json& j);

/// Everything needed to replay a command.
struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;
  std::map<std::string, std::string> config;
  std::map<std::string, std::string> input_digests;  // path -> sha256
  std::uint64_t seed = 0;
  std::string artifact_version = kArtifactVersion;
  std::set<std::string> training_languages;
  std::map<std::string, std::string> lexicons;  // language -> path

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

// ---------------------------------------------------------------------------
// Run directory layout:
//   <run>/manifest.json, <run>/config.txt, <run>/summary.json
//   <run>/fold<i>/{checkpoint.bin, metrics.json, log.txt}   (i starts at 1)
// ---------------------------------------------------------------------------

std::filesystem::path fold_dir(const std::filesystem::path& run_dir, int fold_index);

/// Fold models found in a run directory, in fold order.
std::vector<SentimentModel> load_run_models(const std::filesystem::path& run_dir,
                                            std::optional<int> only_fold = std::nullopt);

RunManifest load_manifest(const std::filesystem::path& run_dir);

/// Rebuilds the training configuration stored in a run directory.
TrainConfig load_run_config(const std::filesystem::path& run_dir);

/// Validation report of one fold plus its epoch history, as written to
/// fold<i>/metrics.json.
nlohmann::json fold_metrics_json(const FoldResult& fold, const TrainConfig& config);

/// Writes manifest.json, config.txt, summary.json and every fold directory.
void save_cv_run(const std::filesystem::path& run_dir, CvResult& cv, const TrainConfig& config,
                 const RunManifest& manifest);

}  // namespace sacl
