#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "airmc/dense.hpp"
#include "airmc/dmf_model.hpp"
#include "airmc/graph_reg.hpp"

namespace airmc {

// --- Finite differences -------------------------------------------------------

using ParamPack = std::vector<Matrix>;
using PackFunction = std::function<double(const ParamPack&)>;

/// Central differences (f(p + h e) - f(p - h e)) / (2h), one coordinate at a
/// time. Throws NumericalError naming the block and entry of any non-finite
/// probe.
ParamPack finite_diff_grad(const PackFunction& f, const ParamPack& params, double step = 1e-5);

/// ||analytic - numeric||_F / max(||numeric||_F, floor); the floor keeps
/// vanishing gradients from dividing by zero.
double relative_error(const Matrix& analytic, const Matrix& numeric, double floor = 1e-8);

// --- Balancedness -------------------------------------------------------------

/// max_l || W[l+1]^T W[l+1] - W[l] W[l]^T ||_max. Requires depth >= 2.
double check_balancedness(const FactorChain& chain);

// --- Singular-value dynamics ------------------------------------------------

struct Theorem1Config {
  Index rows = 6;
  Index cols = 6;
  Index depth = 3;
  double lambda_row = 0.1;
  double lambda_col = 0.1;
  AdjacencyVariant variant = AdjacencyVariant::SymmetrizedSum;
  double step = 1e-3;
  std::int64_t iters = 1001;
  std::int64_t check_stride = 5;
  Index top_k = 3;
  double observed_fraction = 0.6;
  std::uint64_t seed = 1;
};

struct Theorem1Record {
  std::int64_t iter = 0;
  Index k = 0;  // 0-based singular value index
  double sigma = 0.0;
  double lhs = 0.0;  // centred difference of sigma_k
  double rhs = 0.0;  // predicted rate
  double gamma = 0.0;
  double rel_error = 0.0;
  bool crossing = false;  // pairing by index unreliable in this window
};

struct Theorem1Report {
  Theorem1Config config;
  std::vector<Theorem1Record> records;
  double median_rel_error = 0.0;  // over non-crossing records
  double max_rel_error = 0.0;
  double min_gamma = 0.0;
  std::int64_t checks = 0;
  std::int64_t excluded = 0;
  double final_balancedness = 0.0;
};

/// Integrates the factor (and regularizer-parameter) gradient flow by explicit
/// Euler from a balanced start and compares the measured rate of each top
/// singular value with
///   -L (s^2)^(1-1/L) <grad_X fidelity, u v^T> - 2L (s^2)^(3/2-1/L) gamma_k,
///   gamma_k = lambda_r u^T L_r u + lambda_c v^T L_c v.
Theorem1Report verify_theorem1(const Theorem1Config& cfg);

// --- Regularizer-only flow ----------------------------------------------------

struct Theorem2Config {
  AdjacencyVariant variant = AdjacencyVariant::SymmetrizedSum;
  double epsilon = 0.0;  // W(0) = epsilon * ones
  double step = 1.0;
  std::int64_t iters = 20000;
  std::int64_t snapshot_every = 1000;
};

struct Theorem2Report {
  Theorem2Config config;
  Matrix rows_matrix;
  Index m = 0;
  Index s = 0;  // number of unordered identical-row pairs
  double gamma = 0.0;
  // Class of each (k, l): 0 = distinct rows (S1), 1 = identical rows (S2), 2 = diagonal.
  std::vector<std::vector<int>> pair_class;
  Matrix target;       // limiting adjacency
  Matrix a_initial;
  Matrix a_final;
  std::vector<std::int64_t> snapshot_iters;
  std::vector<Matrix> snapshots;
  std::vector<double> times;      // t = iter * step, one per iteration (including 0)
  std::vector<double> reg_values;
  std::vector<double> max_error;  // max_kl |A_kl(t) - target_kl|
  double max_symmetry_drift = 0.0;
  double final_error_s1 = 0.0;
  double final_error_s2 = 0.0;
  double final_error_diag = 0.0;
  double decay_rate = 0.0;  // fitted slope of log(max_error) over the final third
  bool decay_flag = false;  // distinct rows yet no measurable decay
  // Time at which every entry of the class has closed half its initial gap
  // (negative when never reached or the class is empty).
  double half_gap_time_s1 = -1.0;
  double half_gap_time_s2 = -1.0;
};

/// Integrates dW/dt = -grad_W tr(X^T L(W) X) for fixed rows X (unit norm,
/// strictly positive entries) from W(0) = epsilon * ones.
Theorem2Report verify_theorem2(const Matrix& rows, const Theorem2Config& cfg);

/// Unit-norm strictly positive rows: the first `duplicates` rows identical,
/// every other row distinct. Deterministic.
Matrix theorem2_rows(Index m, Index duplicates);

struct CorollaryCheck {
  bool non_negative = true;
  bool non_increasing = true;
  bool bound_at_zero = true;
  bool tail_decreasing = true;  // vacuous when S1 is empty
  double tail_slope = 0.0;
  std::string detail;

  bool passed() const { return non_negative && non_increasing && bound_at_zero && tail_decreasing; }
};

CorollaryCheck check_corollary1(const Theorem2Report& report);

// Least-squares slope of y against x.
double fit_slope(std::span<const double> x, std::span<const double> y);

}  // namespace airmc

namespace airmc {

// --- Randomized gradient suite ------------------------------------------------

struct GradcheckCase {
  Index rows = 0;
  Index cols = 0;
  Index depth = 0;
  Index width = 0;
  AdjacencyVariant variant = AdjacencyVariant::SymmetrizedSum;
  bool fixed_lap = false;
  // One entry per parameter block: factors W[0..L-1], then W_r, then W_c.
  std::vector<double> block_errors;
  double max_rel_error = 0.0;
};

struct GradcheckSuite {
  std::vector<GradcheckCase> cases;
  double max_rel_error = 0.0;
};

/// Seeded random instances (rows, cols <= 8, depth cycling 1..3, variants
/// alternating, both adaptive regularizers active, a fixed path Laplacian on
/// every other instance) comparing grad_chain with central differences of
/// total_loss.
GradcheckSuite gradcheck_suite(std::uint64_t seed, int instances = 20, double step = 1e-5);

}  // namespace airmc
