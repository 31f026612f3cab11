#pragma once

#include <span>
#include <string>

#include "airmc/dense.hpp"

namespace airmc {

// How the learnable adjacency is built from its parameter matrix w.
//   SymmetrizedSum:    A' = exp(w^T) / sum(exp(w)),  A = A' + A'^T
//   SymmetricExponent: A  = exp(w + w^T) / sum(exp(w))
enum class AdjacencyVariant { SymmetrizedSum, SymmetricExponent };

const char* to_string(AdjacencyVariant v);
AdjacencyVariant parse_adjacency_variant(const std::string& s);

// Map applied to the completed matrix before the energy is taken.
struct Transformation {
  enum class Kind { Row, Column, Block };

  Kind kind = Kind::Row;
  Index block_rows = 1;  // height of one block (Block only)
  Index block_cols = 1;  // width of one block (Block only)

  static Transformation row() { return {Kind::Row, 1, 1}; }
  static Transformation column() { return {Kind::Column, 1, 1}; }
  static Transformation block(Index block_rows, Index block_cols) {
    return {Kind::Block, block_rows, block_cols};
  }
};

// Learnable Dirichlet-energy regularizer lambda * tr(T(X)^T L(w) T(X)).
struct AdaptiveRegularizer {
  Matrix w;
  AdjacencyVariant variant = AdjacencyVariant::SymmetrizedSum;
  Transformation transform = Transformation::row();
  double lambda = 0.0;
};

struct LaplacianPair {
  Matrix a_prime;  // exp(w^T) / sum(exp(w))
  Matrix a;        // symmetric, strictly positive adjacency
  Matrix lap;      // diag(row sums of a) - a
};

/// Row: x. Column: x^T. Block: one row per block (blocks enumerated row-major
/// over the block grid), each row the row-major vectorization of its block.
Matrix apply_transformation(const Transformation& transform, const Matrix& x);

/// Builds A', A and the Laplacian from w. Exponentials are max-shifted so no
/// intermediate overflows unless the adjacency itself is unrepresentable.
LaplacianPair build_adjacency(const Matrix& w, AdjacencyVariant variant);

/// tr(x^T lap x). For a Laplacian of adjacency A this equals
/// 1/2 * sum_ij A_ij ||x_i - x_j||^2.
double dirichlet_energy(const Matrix& x, const Matrix& lap);

/// Unweighted regularizer value tr(T(x)^T L(w) T(x)); lambda is not applied.
double reg_value(const AdaptiveRegularizer& reg, const Matrix& x);

/// Gradient of reg_value with respect to reg.w (lambda not applied).
///
/// With Xt = T(x), D_kl = ||Xt_k - Xt_l||^2, R = reg_value and P = exp(w)/sum(exp(w)):
///   SymmetrizedSum:    (D - R) .* P
///   SymmetricExponent: D .* A - R * P
Matrix grad_reg_wrt_w(const AdaptiveRegularizer& reg, const Matrix& x);

/// 2 lambda_r L_r x + 2 lambda_c x L_c for at most one row and one column
/// regularizer. Block transformations are rejected.
Matrix grad_reg_wrt_x(std::span<const AdaptiveRegularizer> regs, const Matrix& x);

// Everything the training loop needs from one regularizer at one point,
// computed with shared intermediate products.
struct RegularizerEvaluation {
  LaplacianPair laplacian;
  double value = 0.0;  // unweighted
  Matrix grad_w;       // unweighted, d value / d w
  Matrix grad_xt;      // unweighted, d value / d T(x) = 2 L T(x)
};

RegularizerEvaluation evaluate_regularizer(const AdaptiveRegularizer& reg, const Matrix& x);

}  // namespace airmc
