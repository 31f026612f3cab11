#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "airmc/dense.hpp"
#include "airmc/dmf_model.hpp"

namespace airmc {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam (Kingma & Ba). Moment buffers are allocated lazily on
// the first step to match the parameter shapes.
struct AdamState {
  AdamOptions options;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::int64_t step = 0;

  explicit AdamState(AdamOptions opts = {});
};

void adam_step(AdamState& state, std::span<Matrix* const> params, std::span<const Matrix* const> grads);

// params -= step * grads
void gd_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads, double step);

struct InitSpec {
  enum class Kind { Gaussian, Balanced };
  Kind kind = Kind::Gaussian;
  double variance = 1e-5;
  std::vector<double> singular_values;  // Balanced only
  std::uint64_t seed = 0;
};

struct OptimizerSpec {
  enum class Kind { Adam, GradientDescent };
  Kind kind = Kind::Adam;
  AdamOptions adam;
  double step = 1e-3;  // GradientDescent only
};

struct TrainConfig {
  // Regularizer parameter matrices inside the objective are the starting
  // point for balanced initialization and are overwritten by Gaussian
  // initialization.
  ObjectiveConfig objective;
  Index depth = 3;
  Index width = 0;  // 0 means min(rows, cols)
  InitSpec init;
  OptimizerSpec optimizer;
  std::int64_t max_iters = 100000;
  double delta = 0.0;
  std::int64_t check_every = 100;
  // The stopping test is only evaluated from iteration warmup_checks * check_every on.
  std::int64_t warmup_checks = 10;
  std::int64_t log_every = 100;
  Index track_sigmas = 0;
  std::vector<std::int64_t> snapshot_at;

  void validate() const;
};

struct TrajectoryRecord {
  std::int64_t iter = 0;
  double loss = 0.0;
  double fidelity = 0.0;
  double reg_row = 0.0;
  double reg_col = 0.0;
  double mse_obs = 0.0;
  std::optional<double> mse_unobs;
  std::vector<double> sigmas;
};

struct LaplacianSnapshot {
  std::int64_t iter = 0;
  std::optional<Matrix> a_row;
  std::optional<Matrix> a_col;
};

struct TrajectoryLog {
  std::vector<TrajectoryRecord> records;
  std::vector<LaplacianSnapshot> snapshots;
};

enum class StopReason { Threshold, MaxIters, Divergence };

const char* to_string(StopReason r);

struct TrainResult {
  FactorChain chain;
  std::optional<AdaptiveRegularizer> row_reg;
  std::optional<AdaptiveRegularizer> col_reg;
  Matrix xhat;
  TrajectoryLog log;
  StopReason stop = StopReason::MaxIters;
  std::int64_t iterations = 0;  // parameter updates performed
};

/// Full-batch training of all factors and regularizer parameters jointly.
///
/// Records are taken at iteration 0, every log_every updates, and at the final
/// state. Every check_every updates the raw regularizer values are compared
/// with those of the previous check; once past the warm-up, a change below
/// delta on both sides stops the run (only when both adaptive regularizers are
/// configured). A non-finite loss stops the run with StopReason::Divergence.
TrainResult train(const TrainConfig& cfg, const std::optional<Matrix>& truth = std::nullopt);

}  // namespace airmc
