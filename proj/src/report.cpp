#include "sacl/report.hpp"

#include "sacl/config.hpp"
#include "sacl/run.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace sacl {

namespace {

constexpr std::array<std::string_view, 14> kLanguageOrder = {
    "amh", "arq", "hau", "ibo", "kin", "ary", "pt-MZ", "pcm", "orm", "swa", "tir", "twi", "tso", "yor"};

int subtask_rank(std::string_view s) {
  if (s == kSubtaskMultilingual) return 0;
  if (s == kSubtaskZeroShot) return 1;
  if (s == kSubtaskValidation) return 2;
  return 3;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string file_safe(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return s;
}

}  // namespace

int language_rank(std::string_view code) {
  const auto it = std::find(kLanguageOrder.begin(), kLanguageOrder.end(), code);
  return it == kLanguageOrder.end() ? static_cast<int>(kLanguageOrder.size()) : static_cast<int>(it - kLanguageOrder.begin());
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["subtask"] = subtask;
  j["language"] = language;
  j["weighted_f1"] = scores.weighted_f1;
  j["per_class"] = nlohmann::json::object();
  j["zero_support"] = nlohmann::json::array();
  for (auto p : kAllPolarities) {
    const auto& cs = scores.per_class[index_of(p)];
    j["per_class"][std::string(to_string(p))] = {
        {"p", cs.precision}, {"r", cs.recall}, {"f1", cs.f1}, {"support", cs.support}};
    if (cs.zero_support) j["zero_support"].push_back(std::string(to_string(p)));
  }
  j["confusion"] = scores.confusion;
  const Matrix norm = confusion_normalized();
  std::vector<std::vector<double>> rows(kNumPolarities, std::vector<double>(kNumPolarities));
  for (int r = 0; r < kNumPolarities; ++r) {
    for (int c = 0; c < kNumPolarities; ++c) rows[r][c] = norm(r, c);
  }
  j["confusion_normalized"] = rows;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  if (!variant.empty()) j["variant"] = variant;
  return j;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.subtask = j.at("subtask").get<std::string>();
  r.language = j.at("language").get<std::string>();
  r.variant = j.value("variant", std::string{});
  r.config_hash = j.at("config_hash").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.scores.weighted_f1 = j.at("weighted_f1").get<double>();
  r.scores.confusion = j.at("confusion").get<ConfusionCounts>();
  for (auto p : kAllPolarities) {
    const auto& pc = j.at("per_class").at(std::string(to_string(p)));
    auto& cs = r.scores.per_class[index_of(p)];
    cs.precision = pc.at("p").get<double>();
    cs.recall = pc.at("r").get<double>();
    cs.f1 = pc.at("f1").get<double>();
    cs.support = pc.at("support").get<std::size_t>();
    cs.zero_support = cs.support == 0;
  }
  return r;
}

MetricsReport make_report(std::span<const Polarity> preds, std::span<const Polarity> golds,
                          std::string subtask, std::string language, std::string config_hash,
                          std::uint64_t seed, std::string variant) {
  MetricsReport r;
  r.subtask = std::move(subtask);
  r.language = std::move(language);
  r.variant = std::move(variant);
  r.scores = score(preds, golds);
  r.config_hash = std::move(config_hash);
  r.seed = seed;
  return r;
}

void sort_reports(std::vector<MetricsReport>& reports) {
  std::stable_sort(reports.begin(), reports.end(), [](const MetricsReport& a, const MetricsReport& b) {
    const auto ka = std::make_tuple(subtask_rank(a.subtask), a.subtask, language_rank(a.language), a.language, a.variant);
    const auto kb = std::make_tuple(subtask_rank(b.subtask), b.subtask, language_rank(b.language), b.language, b.variant);
    return ka < kb;
  });
}

std::string render_summary(const std::vector<MetricsReport>& reports) {
  std::ostringstream md;
  md << "| subtask | language | variant | w-F1 | F1 positive | F1 negative | F1 neutral | n | config |\n";
  md << "|---|---|---|---:|---:|---:|---:|---:|---|\n";
  for (const auto& r : reports) {
    std::size_t n = 0;
    for (const auto& cs : r.scores.per_class) n += cs.support;
    md << "| " << r.subtask << " | " << r.language << " | " << (r.variant.empty() ? "-" : r.variant) << " | "
       << fixed(100.0 * r.weighted_f1(), 1);
    for (const auto& cs : r.scores.per_class) md << " | " << fixed(100.0 * cs.f1, 1);
    md << " | " << n << " | " << r.config_hash << " |\n";
  }
  return md.str();
}

std::vector<std::filesystem::path> emit_report(std::vector<MetricsReport> reports,
                                               const std::filesystem::path& dir) {
  if (reports.empty()) throw Error("emit_report: no reports");
  sort_reports(reports);
  std::vector<std::filesystem::path> written;

  nlohmann::json all = nlohmann::json::array();
  for (const auto& r : reports) all.push_back(r.to_json());
  written.push_back(dir / "scores.json");
  write_text_file(written.back(), dump_json(all));

  written.push_back(dir / "summary.md");
  write_text_file(written.back(), render_summary(reports));

  for (const auto& r : reports) {
    std::string name = "confusion_" + file_safe(r.subtask) + "_" + file_safe(r.language);
    if (!r.variant.empty()) name += "_" + file_safe(r.variant);
    std::ostringstream tsv;
    tsv << "gold\\pred";
    for (auto p : kAllPolarities) tsv << '\t' << to_string(p);
    tsv << '\n';
    const Matrix norm = r.confusion_normalized();
    for (auto g : kAllPolarities) {
      tsv << to_string(g);
      for (auto p : kAllPolarities) tsv << '\t' << format_double(norm(index_of(g), index_of(p)));
      tsv << '\n';
    }
    written.push_back(dir / (name + ".tsv"));
    write_text_file(written.back(), tsv.str());
  }
  return written;
}

}  // namespace sacl
