#pragma once

#include "sacl/common.hpp"

#include <span>
#include <vector>

namespace sacl {

using ConfusionCounts = std::array<std::array<std::size_t, kNumPolarities>, kNumPolarities>;

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  bool zero_support = false;    // category absent from golds: recall and F1 defined as 0
  bool no_predictions = false;  // category never predicted: precision defined as 0
};

struct Scores {
  std::array<ClassScores, kNumPolarities> per_class{};
  double weighted_f1 = 0.0;
  ConfusionCounts confusion{};
};

/// Rows are gold categories, columns predictions, in (positive, negative, neutral) order.
ConfusionCounts confusion_counts(std::span<const Polarity> preds, std::span<const Polarity> golds);

/// Counts, or row fractions when `normalize` is set. Rows with no support stay all-zero.
Matrix confusion_matrix(std::span<const Polarity> preds, std::span<const Polarity> golds, bool normalize);
Matrix normalize_rows(const ConfusionCounts& counts);

Scores score(std::span<const Polarity> preds, std::span<const Polarity> golds);

/// Support-weighted mean of per-category F1.
double weighted_f1(std::span<const Polarity> preds, std::span<const Polarity> golds);

}  // namespace sacl
