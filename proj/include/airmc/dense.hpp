#pragma once

#include <Eigen/Dense>

#include <vector>

namespace airmc {

using Index = Eigen::Index;

// Dense row-major double matrix; the numeric carrier for every model quantity.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Thin SVD x = u * diag(sigma) * v^T with k = min(rows, cols).
struct SvdResult {
  Matrix u;                   // rows x k, orthonormal columns
  std::vector<double> sigma;  // descending, non-negative
  Matrix v;                   // cols x k, orthonormal columns
};

/// Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
///
/// Singular values are returned non-negative and sorted descending; ties keep
/// the order in which the columns converged. Columns of u belonging to zero
/// singular values are completed to an orthonormal set. Throws NumericalError
/// when the sweep cap is reached without convergence and ConfigError on empty
/// or non-finite input.
SvdResult svd(const Matrix& x);

/// Singular values only (same algorithm, skips the vector bookkeeping).
std::vector<double> singular_values(const Matrix& x);

double max_abs(const Matrix& x);
bool all_finite(const Matrix& x);

}  // namespace airmc
