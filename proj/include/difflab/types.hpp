#pragma once

#include <Eigen/Dense>

namespace difflab {

using Vec = Eigen::VectorXd;
// Sample sets and batches: one row per sample, one column per dimension.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace difflab
