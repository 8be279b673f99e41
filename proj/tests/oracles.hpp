#pragma once

// Independent reference implementations used by the tests. None of these
// call into the library's loss, metric or optimizer code.

#include "sacl/common.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace oracle {

using sacl::Matrix;
using sacl::Polarity;

inline int label_index(Polarity p) {
  switch (p) {
    case Polarity::positive: return 0;
    case Polarity::negative: return 1;
    case Polarity::neutral: return 2;
  }
  return -1;
}

/// Sum over samples of -w_y * log softmax(z)_y, computed one sample at a time.
inline double weighted_ce(const Matrix& z, const std::vector<Polarity>& y, const std::array<double, 3>& w,
                          bool mean = false) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    double denom = 0.0;
    for (Eigen::Index k = 0; k < z.cols(); ++k) denom += std::exp(z(i, k));
    const int g = label_index(y[static_cast<std::size_t>(i)]);
    total += -w[g] * std::log(std::exp(z(i, g)) / denom);
  }
  return mean ? total / static_cast<double>(z.rows()) : total;
}

/// Triple loop over (anchor i, positive e, contrast a) with plain exp/log.
inline double scl_bruteforce(const Matrix& z, const std::vector<Polarity>& y, double tau, bool mean = false) {
  const auto n = z.rows();
  auto sim = [&](Eigen::Index a, Eigen::Index b) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < z.cols(); ++k) s += z(a, k) * z(b, k);
    return s / tau;
  };
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    int positives = 0;
    double acc = 0.0;
    for (Eigen::Index e = 0; e < n; ++e) {
      if (e == i || y[e] != y[i]) continue;
      ++positives;
      double denom = 0.0;
      for (Eigen::Index a = 0; a < n; ++a) {
        if (a == i) continue;
        denom += std::exp(sim(i, a));
      }
      acc += std::log(std::exp(sim(i, e)) / denom);
    }
    if (positives > 0) total += -acc / positives;
  }
  return mean ? total / static_cast<double>(n) : total;
}

/// Weighted F1 from an explicit tally map.
inline double weighted_f1_tally(const std::vector<Polarity>& preds, const std::vector<Polarity>& golds) {
  std::map<std::pair<int, int>, double> tally;
  for (std::size_t i = 0; i < preds.size(); ++i) tally[{label_index(golds[i]), label_index(preds[i])}] += 1.0;
  double result = 0.0;
  for (int c = 0; c < 3; ++c) {
    double tp = tally[{c, c}];
    double gold_c = 0.0, pred_c = 0.0;
    for (int o = 0; o < 3; ++o) {
      gold_c += tally[{c, o}];
      pred_c += tally[{o, c}];
    }
    if (gold_c == 0.0) continue;
    double p = pred_c > 0.0 ? tp / pred_c : 0.0;
    double r = tp / gold_c;
    double f1 = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    result += gold_c / static_cast<double>(preds.size()) * f1;
  }
  return result;
}

/// Central finite differences of f with respect to every entry of x.
inline Matrix numeric_gradient(Matrix& x, const std::function<double()>& f, double h = 1e-5) {
  Matrix g(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double saved = x(r, c);
      x(r, c) = saved + h;
      const double up = f();
      x(r, c) = saved - h;
      const double down = f();
      x(r, c) = saved;
      g(r, c) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||), or the absolute gap when both are tiny.
inline double relative_error(const Matrix& a, const Matrix& b) {
  const double scale = std::max(a.norm(), b.norm());
  const double gap = (a - b).norm();
  return scale < 1e-8 ? gap : gap / scale;
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

inline std::vector<Polarity> random_labels(std::mt19937_64& rng, std::size_t n, int categories = 3) {
  std::uniform_int_distribution<int> dist(0, categories - 1);
  std::vector<Polarity> out(n);
  for (auto& p : out) p = sacl::polarity_at(dist(rng));
  return out;
}

}  // namespace oracle
