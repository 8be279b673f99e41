#pragma once

#include "sacl/common.hpp"

#include <string>
#include <vector>

namespace sacl {

/// A trainable tensor with its gradient accumulator.
///
/// Row-sparse parameters (the token embedding table) only receive gradient on
/// the rows listed in `touched_rows`; zero_grad clears just those rows.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool decay = true;
  bool row_sparse = false;
  std::vector<Eigen::Index> touched_rows;

  Parameter() = default;
  Parameter(std::string n, Matrix v, bool apply_decay = true, bool sparse = false)
      : name(std::move(n)),
        value(std::move(v)),
        grad(Matrix::Zero(value.rows(), value.cols())),
        decay(apply_decay),
        row_sparse(sparse) {}

  void zero_grad() {
    if (row_sparse) {
      for (auto r : touched_rows) grad.row(r).setZero();
    } else {
      grad.setZero();
    }
    touched_rows.clear();
  }
};

using ParameterRefs = std::vector<Parameter*>;

}  // namespace sacl
