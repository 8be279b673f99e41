#include "sacl/data.hpp"

#include "sacl/seed.hpp"
#include "sacl/text.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace sacl {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Splits into lines, stripping a trailing '\r' from each.
std::vector<std::string_view> split_lines(std::string_view content) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < content.size()) {
    auto pos = content.find('\n', start);
    if (pos == std::string_view::npos) pos = content.size();
    auto line = content.substr(start, pos - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = pos + 1;
  }
  return lines;
}

std::string_view strip_bom(std::string_view s) {
  if (s.size() >= 3 && s.substr(0, 3) == "\xEF\xBB\xBF") s.remove_prefix(3);
  return s;
}

std::string row_ref(std::string_view source, std::size_t line_no) {
  return std::string(source) + ":" + std::to_string(line_no);
}

}  // namespace

// ---------------------------------------------------------------------------
// Dataset TSV
// ---------------------------------------------------------------------------

Dataset parse_dataset(std::string_view content, std::string_view language,
                      const ColumnMap& columns, std::string_view source) {
  const auto lines = split_lines(strip_bom(content));
  if (lines.empty()) throw Error(std::string(source) + ": missing header row");

  const auto header = text::split_tabs(lines[0]);
  auto find_col = [&](const std::string& name) -> std::ptrdiff_t {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : it - header.begin();
  };
  const auto id_col = find_col(columns.id);
  const auto text_col = find_col(columns.text);
  const auto label_col = find_col(columns.label);
  const auto lang_col = columns.language.empty() ? -1 : find_col(columns.language);
  if (id_col < 0 || text_col < 0 || label_col < 0 || (!columns.language.empty() && lang_col < 0)) {
    throw Error(std::string(source) + ": header must contain columns '" + columns.id + "', '" +
                columns.text + "', '" + columns.label + "'" +
                (columns.language.empty() ? "" : ", '" + columns.language + "'"));
  }

  Dataset ds;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = lines[i];
    if (text::trim(line).empty()) continue;
    const auto fields = text::split_tabs(line);
    if (fields.size() != header.size()) {
      throw Error(row_ref(source, i + 1) + ": expected " + std::to_string(header.size()) +
                  " tab-separated columns, found " + std::to_string(fields.size()));
    }
    Example ex;
    ex.id = std::string(text::trim(fields[id_col]));
    ex.text = std::string(fields[text_col]);
    const auto label_str = text::trim(fields[label_col]);
    const auto label = parse_polarity(label_str);
    if (!label) {
      throw Error(row_ref(source, i + 1) + ": unknown label '" + std::string(label_str) +
                  "' (expected positive, negative or neutral)");
    }
    ex.label = *label;
    ex.language = lang_col >= 0 ? std::string(text::trim(fields[lang_col])) : std::string(language);
    if (ex.id.empty()) throw Error(row_ref(source, i + 1) + ": empty id");
    if (text::trim(ex.text).empty()) throw Error(row_ref(source, i + 1) + ": empty text");
    if (!seen.insert(ex.id).second) {
      throw Error(row_ref(source, i + 1) + ": duplicate id '" + ex.id + "'");
    }
    ds.languages.insert(ex.language);
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path, std::string_view language,
                     const ColumnMap& columns) {
  return parse_dataset(read_file(path), language, columns, path.string());
}

std::string serialize_dataset(const Dataset& dataset, const ColumnMap& columns) {
  std::string out = columns.id + "\t" + columns.text + "\t" + columns.label;
  if (!columns.language.empty()) out += "\t" + columns.language;
  out += "\n";
  for (const auto& ex : dataset.examples) {
    if (ex.text.find_first_of("\t\n\r") != std::string::npos ||
        ex.id.find_first_of("\t\n\r") != std::string::npos) {
      throw Error("example '" + ex.id + "' contains a tab or line break and cannot be written as TSV");
    }
    out += ex.id + "\t" + ex.text + "\t" + std::string(to_string(ex.label));
    if (!columns.language.empty()) out += "\t" + ex.language;
    out += "\n";
  }
  return out;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path,
                  const ColumnMap& columns) {
  const auto content = serialize_dataset(dataset, columns);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  out << content;
  if (!out) throw Error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Lexicon TSV
// ---------------------------------------------------------------------------

Lexicon parse_lexicon(std::string_view content, std::string_view language,
                      std::string_view source) {
  Lexicon lex;
  lex.language = std::string(language);
  std::unordered_set<std::string> seen;
  const auto lines = split_lines(strip_bom(content));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const auto fields = text::split_tabs(lines[i]);
    if (fields.size() != 2) {
      throw Error(row_ref(source, i + 1) + ": expected 'phrase<TAB>polarity', found " +
                  std::to_string(fields.size()) + " columns");
    }
    const auto phrase = text::trim(fields[0]);
    const auto pol_str = text::trim(fields[1]);
    if (phrase.empty()) throw Error(row_ref(source, i + 1) + ": empty phrase");
    const auto pol = parse_polarity(pol_str);
    if (!pol || *pol == Polarity::neutral) {
      throw Error(row_ref(source, i + 1) + ": lexicon polarity must be positive or negative, got '" +
                  std::string(pol_str) + "'");
    }
    if (!seen.insert(text::lowercase(phrase)).second) continue;
    lex.entries.push_back({std::string(phrase), *pol});
  }
  return lex;
}

Lexicon load_lexicon(const std::filesystem::path& path, std::string_view language) {
  return parse_lexicon(read_file(path), language, path.string());
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

Dataset combine_multilingual(std::span<const Dataset> datasets) {
  if (datasets.size() == 1) return datasets.front();
  Dataset out;
  std::unordered_set<std::string> seen;
  for (const auto& ds : datasets) {
    for (const auto& ex : ds.examples) {
      Example copy = ex;
      const auto prefix = ex.language + ":";
      if (copy.id.rfind(prefix, 0) != 0) copy.id = prefix + copy.id;
      if (!seen.insert(copy.id).second) {
        throw Error("id collision while combining datasets: '" + copy.id + "'");
      }
      out.examples.push_back(std::move(copy));
    }
    out.languages.insert(ds.languages.begin(), ds.languages.end());
  }
  return out;
}

LabelCounts label_counts(const Dataset& dataset) {
  LabelCounts counts{};
  for (const auto& ex : dataset.examples) ++counts[index_of(ex.label)];
  return counts;
}

std::vector<FoldSplit> stratified_kfold(const Dataset& dataset, int k, std::uint64_t seed,
                                        StratifyBy by) {
  if (k < 2) throw Error("stratified_kfold: k must be >= 2, got " + std::to_string(k));
  const auto counts = label_counts(dataset);
  for (auto p : kAllPolarities) {
    if (counts[index_of(p)] > 0 && counts[index_of(p)] < static_cast<std::size_t>(k)) {
      throw Error("stratified_kfold: category '" + std::string(to_string(p)) + "' has " +
                  std::to_string(counts[index_of(p)]) + " examples, fewer than k=" +
                  std::to_string(k));
    }
  }

  // Canonical order: by id.
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dataset.examples[a].id < dataset.examples[b].id;
  });

  // Per label: strata (one per language when stratifying jointly), each
  // shuffled, then dealt round-robin continuously across the label's strata.
  // A contiguous run of a round-robin deal gives every fold floor or ceil of
  // its share, so both the per-stratum and per-label counts stay balanced.
  Rng rng(derive_seed(seed, "kfold"));
  std::vector<int> fold_of(dataset.size(), 0);
  int next_fold = 0;
  for (auto p : kAllPolarities) {
    std::map<std::string, std::vector<std::size_t>> strata;
    for (auto idx : order) {
      const auto& ex = dataset.examples[idx];
      if (ex.label != p) continue;
      strata[by == StratifyBy::language_and_label ? ex.language : std::string()].push_back(idx);
    }
    for (auto& [key, members] : strata) {
      portable_shuffle(members.begin(), members.end(), rng);
      for (auto idx : members) {
        fold_of[idx] = next_fold;
        next_fold = (next_fold + 1) % k;
      }
    }
  }

  std::vector<FoldSplit> folds(k);
  for (int f = 0; f < k; ++f) folds[f].fold_index = f;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (int f = 0; f < k; ++f) {
      auto& ids = fold_of[i] == f ? folds[f].val_ids : folds[f].train_ids;
      ids.push_back(dataset.examples[i].id);
    }
  }
  return folds;
}

LabelWeights compute_label_weights(const Dataset& dataset) {
  const auto counts = label_counts(dataset);
  const auto total = static_cast<double>(dataset.size());
  LabelWeights w;
  for (auto p : kAllPolarities) {
    const auto n = counts[index_of(p)];
    if (n == 0) {
      throw Error("compute_label_weights: category '" + std::string(to_string(p)) +
                  "' has no examples");
    }
    w.weight[index_of(p)] = total / (kNumPolarities * static_cast<double>(n));
  }
  return w;
}

Dataset subset(const Dataset& dataset, const std::vector<std::string>& ids) {
  std::unordered_set<std::string> wanted(ids.begin(), ids.end());
  Dataset out;
  for (const auto& ex : dataset.examples) {
    if (wanted.count(ex.id)) {
      out.examples.push_back(ex);
      out.languages.insert(ex.language);
    }
  }
  return out;
}

}  // namespace sacl
