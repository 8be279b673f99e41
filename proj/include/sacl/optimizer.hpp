#pragma once

#include "sacl/parameters.hpp"

#include <vector>

namespace sacl {

struct AdamConfig {
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-2;
};

/// Adam with decoupled weight decay:
///   p <- p * (1 - lr * wd)            (only parameters with decay == true)
///   m <- b1 m + (1 - b1) g ;  v <- b2 v + (1 - b2) g^2
///   p <- p - lr * m_hat / (sqrt(v_hat) + eps)
///
/// Row-sparse parameters are updated only on rows that have ever received a
/// gradient. Those parameters carry no weight decay, so a row whose moments
/// are still zero would receive an update of exactly zero anyway.
class AdamW {
 public:
  AdamW(ParameterRefs params, const AdamConfig& config);

  void step();
  long step_count() const { return steps_; }
  const AdamConfig& config() const { return config_; }

 private:
  struct State {
    Matrix m, v;
    std::vector<std::uint8_t> row_active;
    std::vector<Eigen::Index> active_rows;
  };

  ParameterRefs params_;
  AdamConfig config_;
  std::vector<State> state_;
  long steps_ = 0;
};

}  // namespace sacl
