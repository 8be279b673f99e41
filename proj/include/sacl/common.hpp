#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sacl {

// Row-major so that embedding rows and per-token activations are contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Polarity categories. The order is fixed everywhere: confusion matrix rows,
// logit columns and argmax tie-breaking all follow it.
// ---------------------------------------------------------------------------
enum class Polarity : std::uint8_t { positive = 0, negative = 1, neutral = 2 };

inline constexpr int kNumPolarities = 3;
inline constexpr std::array<Polarity, kNumPolarities> kAllPolarities = {
    Polarity::positive, Polarity::negative, Polarity::neutral};

constexpr int index_of(Polarity p) { return static_cast<int>(p); }
constexpr Polarity polarity_at(int i) { return static_cast<Polarity>(i); }

constexpr std::string_view to_string(Polarity p) {
  switch (p) {
    case Polarity::positive: return "positive";
    case Polarity::negative: return "negative";
    case Polarity::neutral: return "neutral";
  }
  return "?";
}

inline std::optional<Polarity> parse_polarity(std::string_view s) {
  if (s == "positive") return Polarity::positive;
  if (s == "negative") return Polarity::negative;
  if (s == "neutral") return Polarity::neutral;
  return std::nullopt;
}

}  // namespace sacl
