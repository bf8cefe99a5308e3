#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace bigrid {

/// Row-compressed sparse matrix; column indices are sorted within a row.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using Vector = Eigen::VectorXd;

} // namespace bigrid
