#pragma once

#include "sacl/metrics.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace sacl {

inline constexpr const char* kSubtaskMultilingual = "multilingual";
inline constexpr const char* kSubtaskZeroShot = "zero-shot";
inline constexpr const char* kSubtaskValidation = "validation";

struct MetricsReport {
  std::string subtask;
  std::string language;
  std::string variant;  // ablation configuration name, empty otherwise
  Scores scores;
  std::string config_hash;
  std::uint64_t seed = 0;

  double weighted_f1() const { return scores.weighted_f1; }
  Matrix confusion_normalized() const { return normalize_rows(scores.confusion); }

  /// {subtask, language, weighted_f1, per_class: {label: {p, r, f1, support}},
  ///  confusion, confusion_normalized, config_hash, seed, zero_support}
  /// plus "variant" when set.
  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
};

MetricsReport make_report(std::span<const Polarity> preds, std::span<const Polarity> golds,
                          std::string subtask, std::string language, std::string config_hash,
                          std::uint64_t seed, std::string variant = {});

/// Position of a language code in the fixed report order (amh, arq, hau,
/// ibo, kin, ary, pt-MZ, pcm, orm, swa, tir, twi, tso, yor); unknown codes
/// sort after, alphabetically.
int language_rank(std::string_view code);

/// Orders by (subtask, language, variant).
void sort_reports(std::vector<MetricsReport>& reports);

/// Writes scores.json, summary.md and one confusion_<subtask>_<language>[_<variant>].tsv
/// per report into `dir`. Returns the written paths.
std::vector<std::filesystem::path> emit_report(std::vector<MetricsReport> reports,
                                               const std::filesystem::path& dir);

/// Markdown table, one row per report.
std::string render_summary(const std::vector<MetricsReport>& reports);

}  // namespace sacl
