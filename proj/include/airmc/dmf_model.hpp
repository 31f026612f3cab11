#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "airmc/dense.hpp"
#include "airmc/graph_reg.hpp"

namespace airmc {

struct Entry {
  Index row = 0;
  Index col = 0;

  friend bool operator==(const Entry&, const Entry&) = default;
  friend auto operator<=>(const Entry&, const Entry&) = default;
};

// Observation operator: the observed index set of a rows x cols matrix,
// stored in row-major order so the observation vector is well defined.
class SamplingMask {
 public:
  SamplingMask() = default;

  // Sorts the entries; throws ConfigError on out-of-range, duplicate, or
  // empty input.
  SamplingMask(Index rows, Index cols, std::vector<Entry> observed);

  static SamplingMask full(Index rows, Index cols);
  // Observed wherever indicator(i, j) != 0.
  static SamplingMask from_indicator(const Matrix& indicator);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index size() const { return static_cast<Index>(observed_.size()); }
  Index unobserved_count() const { return rows_ * cols_ - size(); }
  const std::vector<Entry>& observed() const { return observed_; }

  // Entries of x at the observed positions, in mask order.
  Vector apply(const Matrix& x) const;
  // Places values at the observed positions of a zero matrix.
  Matrix adjoint(const Vector& values) const;
  // 1 at observed positions, 0 elsewhere.
  Matrix indicator() const;

 private:
  void require_shape(const Matrix& x, const char* where) const;

  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Entry> observed_;
};

// Factors W[0], ..., W[L-1] with W[l] of shape r_{l+1} x r_l, r_0 = cols and
// r_L = rows. The completed matrix is W[L-1] * ... * W[0].
struct FactorChain {
  std::vector<Matrix> factors;

  Index depth() const { return static_cast<Index>(factors.size()); }
  Index rows() const { return factors.back().rows(); }
  Index cols() const { return factors.front().cols(); }

  // Throws ConfigError unless adjacent factor shapes conform.
  void validate() const;
};

Matrix forward_product(const FactorChain& chain);

enum class Side { Row, Column };

const char* to_string(Side s);

// Non-adaptive Dirichlet-energy term weight * tr(T(X)^T lap T(X)). A path-graph
// Laplacian (first differences between neighbouring rows or columns) is
// applied by stencil; any other Laplacian is applied densely.
struct FixedLaplacian {
  Matrix lap;
  Side side = Side::Row;
  double weight = 0.0;
  bool path_graph = false;

  static FixedLaplacian path(Index size, Side side, double weight);

  // lap * x (Row) or x * lap (Column).
  Matrix apply(const Matrix& x) const;
  double energy(const Matrix& x) const;
};

// Dense Laplacian of the path graph 0 - 1 - ... - (size-1) with unit weights.
Matrix path_laplacian(Index size);

// Objective: 1/2 ||y - A(X)||^2 + lambda_r R_r(X) + lambda_c R_c(X^T)
//            + sum of fixed Dirichlet energies.
struct ObjectiveConfig {
  SamplingMask mask;
  Vector y;
  std::optional<AdaptiveRegularizer> row_reg;  // transform must be Row
  std::optional<AdaptiveRegularizer> col_reg;  // transform must be Column
  std::vector<FixedLaplacian> fixed_laps;

  void validate() const;
};

// (max(y) - min(y)) / (rows * cols): keeps fidelity and regularization on a
// similar scale.
double default_reg_weight(const SamplingMask& mask, const Vector& y);

struct LossParts {
  double fidelity = 0.0;
  double reg_row = 0.0;  // lambda_r * R_r
  double reg_col = 0.0;  // lambda_c * R_c
  double fixed = 0.0;
  double total = 0.0;
};

struct ChainGradient {
  std::vector<Matrix> factors;
  std::optional<Matrix> w_row;  // d loss / d W_r (lambda applied)
  std::optional<Matrix> w_col;
};

// One forward/backward pass. Also exposes the pieces the trainer logs.
struct Evaluation {
  Matrix xhat;
  LossParts loss;
  ChainGradient grad;
  // Raw (unweighted) regularizer values, for the stopping rule.
  std::optional<double> raw_reg_row;
  std::optional<double> raw_reg_col;
};

Evaluation evaluate(const ObjectiveConfig& cfg, const FactorChain& chain);
LossParts total_loss(const ObjectiveConfig& cfg, const FactorChain& chain);
ChainGradient grad_chain(const ObjectiveConfig& cfg, const FactorChain& chain);

struct ShapePlan {
  Index rows = 0;
  Index cols = 0;
  Index depth = 3;
  Index width = 0;  // inner dimension; 0 means min(rows, cols)
  bool row_reg = false;
  bool col_reg = false;

  Index resolved_width() const;
};

struct InitResult {
  FactorChain chain;
  std::optional<Matrix> w_row;
  std::optional<Matrix> w_col;
};

/// Every entry i.i.d. normal(0, variance), drawn in the order factors
/// W[0..L-1] (row-major each), then W_r, then W_c.
InitResult gaussian_init(const ShapePlan& plan, double variance, std::uint64_t seed);

/// Balanced factors W[l] = Q[l+1] diag(s^(1/L)) Q[l]^T whose product has
/// exactly the requested singular values. Inner widths are min(rows, cols).
FactorChain balanced_init(Index rows, Index cols, Index depth, std::span<const double> singular_values,
                          std::uint64_t seed);

}  // namespace airmc
