#pragma once

#include <Eigen/Dense>

namespace plangan::nn {

// Row-major double matrix. Batches are stored one sample per row.
using DenseMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

inline bool AllFinite(const DenseMatrix& m) { return m.allFinite(); }
inline bool AllFinite(const Vector& v) { return v.allFinite(); }

// Horizontal concatenation of row-aligned blocks.
DenseMatrix ConcatCols(std::initializer_list<const DenseMatrix*> blocks);

}  // namespace plangan::nn
