#include "sacl/metrics.hpp"

namespace sacl {

namespace {

void check_lengths(std::span<const Polarity> preds, std::span<const Polarity> golds) {
  if (preds.size() != golds.size()) {
    throw Error("metrics: " + std::to_string(preds.size()) + " predictions for " +
                std::to_string(golds.size()) + " gold labels");
  }
  if (golds.empty()) throw Error("metrics: empty prediction set");
}

}  // namespace

ConfusionCounts confusion_counts(std::span<const Polarity> preds, std::span<const Polarity> golds) {
  check_lengths(preds, golds);
  ConfusionCounts c{};
  for (std::size_t i = 0; i < preds.size(); ++i) ++c[index_of(golds[i])][index_of(preds[i])];
  return c;
}

Matrix normalize_rows(const ConfusionCounts& counts) {
  Matrix m = Matrix::Zero(kNumPolarities, kNumPolarities);
  for (int g = 0; g < kNumPolarities; ++g) {
    std::size_t row = 0;
    for (int p = 0; p < kNumPolarities; ++p) row += counts[g][p];
    if (row == 0) continue;
    for (int p = 0; p < kNumPolarities; ++p) {
      m(g, p) = static_cast<double>(counts[g][p]) / static_cast<double>(row);
    }
  }
  return m;
}

Matrix confusion_matrix(std::span<const Polarity> preds, std::span<const Polarity> golds, bool normalize) {
  const auto counts = confusion_counts(preds, golds);
  if (normalize) return normalize_rows(counts);
  Matrix m(kNumPolarities, kNumPolarities);
  for (int g = 0; g < kNumPolarities; ++g) {
    for (int p = 0; p < kNumPolarities; ++p) m(g, p) = static_cast<double>(counts[g][p]);
  }
  return m;
}

Scores score(std::span<const Polarity> preds, std::span<const Polarity> golds) {
  Scores s;
  s.confusion = confusion_counts(preds, golds);
  const auto n = static_cast<double>(golds.size());
  for (int c = 0; c < kNumPolarities; ++c) {
    std::size_t tp = s.confusion[c][c];
    std::size_t gold_c = 0;
    std::size_t pred_c = 0;
    for (int o = 0; o < kNumPolarities; ++o) {
      gold_c += s.confusion[c][o];
      pred_c += s.confusion[o][c];
    }
    auto& cs = s.per_class[c];
    cs.support = gold_c;
    cs.zero_support = gold_c == 0;
    cs.no_predictions = pred_c == 0;
    cs.precision = pred_c ? static_cast<double>(tp) / static_cast<double>(pred_c) : 0.0;
    cs.recall = gold_c ? static_cast<double>(tp) / static_cast<double>(gold_c) : 0.0;
    cs.f1 = cs.precision + cs.recall > 0.0
                ? 2.0 * cs.precision * cs.recall / (cs.precision + cs.recall)
                : 0.0;
    s.weighted_f1 += static_cast<double>(gold_c) / n * cs.f1;
  }
  return s;
}

double weighted_f1(std::span<const Polarity> preds, std::span<const Polarity> golds) {
  return score(preds, golds).weighted_f1;
}

}  // namespace sacl
