#include "sacl/optimizer.hpp"

#include <cmath>

namespace sacl {

AdamW::AdamW(ParameterRefs params, const AdamConfig& config)
    : params_(std::move(params)), config_(config) {
  for (auto* p : params_) {
    State s;
    s.m = Matrix::Zero(p->value.rows(), p->value.cols());
    s.v = Matrix::Zero(p->value.rows(), p->value.cols());
    if (p->row_sparse) {
      if (p->decay) throw Error("AdamW: row-sparse parameter '" + p->name + "' cannot use weight decay");
      s.row_active.assign(p->value.rows(), 0);
    }
    state_.push_back(std::move(s));
  }
}

void AdamW::step() {
  ++steps_;
  const double lr = config_.learning_rate;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  const double decay = 1.0 - lr * config_.weight_decay;

  auto update = [&](double* p, const double* g, double* m, double* v, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + config_.epsilon);
    }
  };

  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    State& s = state_[k];
    if (p.row_sparse) {
      for (auto r : p.touched_rows) {
        if (!s.row_active[r]) {
          s.row_active[r] = 1;
          s.active_rows.push_back(r);
        }
      }
      const auto cols = p.value.cols();
      for (auto r : s.active_rows) {
        update(p.value.row(r).data(), p.grad.row(r).data(), s.m.row(r).data(), s.v.row(r).data(), cols);
      }
    } else {
      if (p.decay) p.value *= decay;
      update(p.value.data(), p.grad.data(), s.m.data(), s.v.data(), p.value.size());
    }
  }
}

}  // namespace sacl
