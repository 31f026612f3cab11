#include "airmc/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "airmc/errors.hpp"

namespace airmc {
namespace {

void require_matching(std::span<Matrix* const> params, std::span<const Matrix* const> grads) {
  if (params.size() != grads.size()) throw ConfigError("parameter/gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->rows() != grads[i]->rows() || params[i]->cols() != grads[i]->cols()) {
      throw ConfigError("parameter/gradient shape mismatch at block " + std::to_string(i));
    }
  }
}

double unobserved_mse(const Matrix& xhat, const Matrix& truth, const Matrix& observed) {
  double sum = 0.0;
  Index count = 0;
  for (Index i = 0; i < xhat.rows(); ++i) {
    for (Index j = 0; j < xhat.cols(); ++j) {
      if (observed(i, j) != 0.0) continue;
      const double d = xhat(i, j) - truth(i, j);
      sum += d * d;
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

}  // namespace

AdamState::AdamState(AdamOptions opts) : options(opts) {
  if (!(options.lr > 0.0) || !(options.eps > 0.0) || !(options.beta1 >= 0.0 && options.beta1 < 1.0) ||
      !(options.beta2 >= 0.0 && options.beta2 < 1.0)) {
    throw ConfigError("adam: need lr > 0, eps > 0 and 0 <= beta1, beta2 < 1");
  }
}

void adam_step(AdamState& state, std::span<Matrix* const> params, std::span<const Matrix* const> grads) {
  require_matching(params, grads);
  if (state.first_moment.empty()) {
    for (const Matrix* p : params) {
      state.first_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
      state.second_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  } else if (state.first_moment.size() != params.size()) {
    throw ConfigError("adam: parameter count changed between steps");
  }
  const AdamOptions& o = state.options;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(o.beta1, t);
  const double correct2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto m = state.first_moment[i].array();
    auto v = state.second_moment[i].array();
    const auto g = grads[i]->array();
    m = o.beta1 * m + (1.0 - o.beta1) * g;
    v = o.beta2 * v + (1.0 - o.beta2) * g.square();
    params[i]->array() -= o.lr * (m / correct1) / ((v / correct2).sqrt() + o.eps);
  }
}

void gd_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads, double step) {
  if (!(step > 0.0)) throw ConfigError("gd_step: step must be positive");
  require_matching(params, grads);
  for (std::size_t i = 0; i < params.size(); ++i) *params[i] -= step * *grads[i];
}

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::Threshold:
      return "threshold";
    case StopReason::MaxIters:
      return "max-iters";
    case StopReason::Divergence:
      return "divergence";
  }
  return "unknown";
}

void TrainConfig::validate() const {
  objective.validate();
  if (depth < 1) throw ConfigError("depth must be >= 1");
  if (width < 0) throw ConfigError("width must be >= 0");
  if (max_iters < 1) throw ConfigError("max-iters must be >= 1");
  if (!(delta >= 0.0)) throw ConfigError("delta must be >= 0");
  if (check_every < 1 || log_every < 1) throw ConfigError("check and log strides must be >= 1");
  if (warmup_checks < 0) throw ConfigError("warm-up must be >= 0");
  if (track_sigmas < 0) throw ConfigError("track-sigmas must be >= 0");
  if (optimizer.kind == OptimizerSpec::Kind::GradientDescent && !(optimizer.step > 0.0))
    throw ConfigError("gradient descent step must be positive");
  if (init.kind == InitSpec::Kind::Gaussian && !(init.variance > 0.0))
    throw ConfigError("initialization variance must be positive");
  if (init.kind == InitSpec::Kind::Balanced && width != 0 &&
      width != std::min(objective.mask.rows(), objective.mask.cols()))
    throw ConfigError("balanced initialization requires width = min(rows, cols)");
}

TrainResult train(const TrainConfig& cfg, const std::optional<Matrix>& truth) {
  cfg.validate();
  const Index rows = cfg.objective.mask.rows();
  const Index cols = cfg.objective.mask.cols();
  if (truth && (truth->rows() != rows || truth->cols() != cols))
    throw ConfigError("ground truth shape does not match the mask");

  TrainResult res;
  ObjectiveConfig objective = cfg.objective;
  if (cfg.init.kind == InitSpec::Kind::Gaussian) {
    ShapePlan plan{rows, cols, cfg.depth, cfg.width, objective.row_reg.has_value(),
                   objective.col_reg.has_value()};
    InitResult init = gaussian_init(plan, cfg.init.variance, cfg.init.seed);
    res.chain = std::move(init.chain);
    if (objective.row_reg) objective.row_reg->w = std::move(*init.w_row);
    if (objective.col_reg) objective.col_reg->w = std::move(*init.w_col);
  } else {
    res.chain = balanced_init(rows, cols, cfg.depth, cfg.init.singular_values, cfg.init.seed);
  }

  std::vector<Matrix*> params;
  for (auto& f : res.chain.factors) params.push_back(&f);
  if (objective.row_reg) params.push_back(&objective.row_reg->w);
  if (objective.col_reg) params.push_back(&objective.col_reg->w);

  AdamState adam(cfg.optimizer.adam);
  const std::set<std::int64_t> snapshot_at(cfg.snapshot_at.begin(), cfg.snapshot_at.end());
  const Matrix observed = cfg.objective.mask.indicator();
  const bool track_unobs = truth.has_value() && cfg.objective.mask.unobserved_count() > 0;
  const bool stopping_rule = objective.row_reg && objective.col_reg;
  const double n_obs = static_cast<double>(cfg.objective.mask.size());

  auto record = [&](std::int64_t it, const Evaluation& ev) {
    TrajectoryRecord rec;
    rec.iter = it;
    rec.loss = ev.loss.total;
    rec.fidelity = ev.loss.fidelity;
    rec.reg_row = ev.loss.reg_row;
    rec.reg_col = ev.loss.reg_col;
    rec.mse_obs = 2.0 * ev.loss.fidelity / n_obs;
    if (track_unobs) rec.mse_unobs = unobserved_mse(ev.xhat, *truth, observed);
    if (cfg.track_sigmas > 0) {
      auto sigma = singular_values(ev.xhat);
      sigma.resize(std::min<std::size_t>(sigma.size(), static_cast<std::size_t>(cfg.track_sigmas)));
      rec.sigmas = std::move(sigma);
    }
    res.log.records.push_back(std::move(rec));
  };

  double prev_row = 0.0;
  double prev_col = 0.0;
  std::int64_t it = 0;
  for (;; ++it) {
    Evaluation ev = evaluate(objective, res.chain);
    if (!std::isfinite(ev.loss.total) || !ev.xhat.allFinite()) {
      res.stop = StopReason::Divergence;
      res.xhat = std::move(ev.xhat);
      break;
    }
    const bool logged = it % cfg.log_every == 0 || it == cfg.max_iters;
    if (logged) record(it, ev);
    if (snapshot_at.count(it) != 0) {
      LaplacianSnapshot snap;
      snap.iter = it;
      if (objective.row_reg) snap.a_row = build_adjacency(objective.row_reg->w, objective.row_reg->variant).a;
      if (objective.col_reg) snap.a_col = build_adjacency(objective.col_reg->w, objective.col_reg->variant).a;
      res.log.snapshots.push_back(std::move(snap));
    }

    if (stopping_rule) {
      const double cur_row = *ev.raw_reg_row;
      const double cur_col = *ev.raw_reg_col;
      if (it > 0 && it % cfg.check_every == 0) {
        if (it >= cfg.warmup_checks * cfg.check_every && std::abs(cur_row - prev_row) < cfg.delta &&
            std::abs(cur_col - prev_col) < cfg.delta) {
          if (!logged) record(it, ev);
          res.stop = StopReason::Threshold;
          res.xhat = std::move(ev.xhat);
          break;
        }
      }
      if (it % cfg.check_every == 0) {
        prev_row = cur_row;
        prev_col = cur_col;
      }
    }
    if (it == cfg.max_iters) {
      res.stop = StopReason::MaxIters;
      res.xhat = std::move(ev.xhat);
      break;
    }

    std::vector<const Matrix*> grads;
    for (const auto& g : ev.grad.factors) grads.push_back(&g);
    if (ev.grad.w_row) grads.push_back(&*ev.grad.w_row);
    if (ev.grad.w_col) grads.push_back(&*ev.grad.w_col);
    if (cfg.optimizer.kind == OptimizerSpec::Kind::Adam) {
      adam_step(adam, params, grads);
    } else {
      gd_step(params, grads, cfg.optimizer.step);
    }
  }
  res.iterations = it;
  res.row_reg = std::move(objective.row_reg);
  res.col_reg = std::move(objective.col_reg);
  return res;
}

}  // namespace airmc
