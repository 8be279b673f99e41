#pragma once

#include "sacl/common.hpp"

#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace sacl {

struct Example {
  std::string id;
  std::string text;
  Polarity label = Polarity::neutral;
  std::string language;

  bool operator==(const Example&) const = default;
};

struct Dataset {
  std::vector<Example> examples;
  std::set<std::string> languages;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
  bool operator==(const Dataset&) const = default;
};

/// Header names of the dataset TSV. When `language` is set, the language is
/// read per row from that column instead of being supplied by the caller.
struct ColumnMap {
  std::string id = "ID";
  std::string text = "tweet";
  std::string label = "label";
  std::string language;
};

struct LexiconEntry {
  std::string phrase;
  Polarity polarity = Polarity::positive;

  bool operator==(const LexiconEntry&) const = default;
};

struct Lexicon {
  std::string language;
  std::vector<LexiconEntry> entries;
};

struct FoldSplit {
  int fold_index = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
};

enum class StratifyBy { label, language_and_label };

struct LabelWeights {
  std::array<double, kNumPolarities> weight{1.0, 1.0, 1.0};

  double operator[](Polarity p) const { return weight[index_of(p)]; }
  static LabelWeights uniform() { return {}; }
};

using LabelCounts = std::array<std::size_t, kNumPolarities>;

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

/// Reads a tab-separated dataset with a mandatory header row. LF and CRLF line
/// endings are accepted. Throws Error naming the row on unknown labels, wrong
/// column counts, empty text and duplicate ids.
Dataset load_dataset(const std::filesystem::path& path, std::string_view language,
                     const ColumnMap& columns = {});

/// Parses dataset TSV content already in memory; `source` is used in messages.
Dataset parse_dataset(std::string_view content, std::string_view language,
                      const ColumnMap& columns = {}, std::string_view source = "<memory>");

void save_dataset(const Dataset& dataset, const std::filesystem::path& path,
                  const ColumnMap& columns = {});
std::string serialize_dataset(const Dataset& dataset, const ColumnMap& columns = {});

/// Headerless `phrase<TAB>polarity` rows; duplicates (case-insensitive) keep
/// the first occurrence.
Lexicon load_lexicon(const std::filesystem::path& path, std::string_view language);
Lexicon parse_lexicon(std::string_view content, std::string_view language,
                      std::string_view source = "<memory>");

// ---------------------------------------------------------------------------
// Dataset operations
// ---------------------------------------------------------------------------

/// Concatenates datasets in order. With two or more inputs every id is
/// prefixed `<lang>:` (ids already carrying their prefix are left alone); a
/// single input is returned unchanged.
Dataset combine_multilingual(std::span<const Dataset> datasets);

LabelCounts label_counts(const Dataset& dataset);

/// Deterministic stratified k-fold split. Examples are put in canonical order
/// (sorted by id) before a single seeded shuffle, so the result depends only
/// on the set of examples, k and seed.
std::vector<FoldSplit> stratified_kfold(const Dataset& dataset, int k, std::uint64_t seed,
                                        StratifyBy by = StratifyBy::label);

/// w_c = N_total / (|Y| * N_c).
LabelWeights compute_label_weights(const Dataset& dataset);

/// Examples whose id is in `ids`, in dataset order.
Dataset subset(const Dataset& dataset, const std::vector<std::string>& ids);

}  // namespace sacl
