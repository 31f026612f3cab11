#include "experiment.hpp"

#include <algorithm>
#include <limits>

#include "airmc/errors.hpp"

namespace airmc::cli {

RegSpec parse_reg_spec(const std::string& text) {
  if (text == "air") return {RegKind::Air, {}, {}};
  if (text == "none") return {RegKind::None, {}, {}};
  if (text == "tv") return {RegKind::Tv, {}, {}};
  if (text.rfind("fixed:", 0) == 0) {
    const std::string rest = text.substr(6);
    const auto comma = rest.find(',');
    RegSpec r{RegKind::Fixed, rest.substr(0, comma), {}};
    if (comma != std::string::npos) r.col_lap = rest.substr(comma + 1);
    if (r.row_lap.empty()) throw ConfigError("fixed regularizer needs a row Laplacian path");
    return r;
  }
  throw ConfigError("unknown regularizer '" + text + "' (expected air, none, tv or fixed:<row>[,<col>])");
}

std::string to_string(const RegSpec& r) {
  switch (r.kind) {
    case RegKind::None:
      return "none";
    case RegKind::Air:
      return "air";
    case RegKind::Tv:
      return "tv";
    case RegKind::Fixed:
      return "fixed:" + r.row_lap + (r.col_lap.empty() ? "" : "," + r.col_lap);
  }
  return "unknown";
}

void resolve(CompletionSettings& s) {
  if (s.input.rows() != s.mask.rows() || s.input.cols() != s.mask.cols())
    throw ConfigError("mask shape does not match the input");
  if (s.truth && (s.truth->rows() != s.input.rows() || s.truth->cols() != s.input.cols()))
    throw ConfigError("truth shape does not match the input");
  if (s.truth && !(s.truth->maxCoeff() > s.truth->minCoeff())) throw ConfigError("truth has zero value range");
  const Vector y = s.mask.apply(s.input);
  const double lam = default_reg_weight(s.mask, y);
  if (!s.lambda_row) s.lambda_row = lam;
  if (!s.lambda_col) s.lambda_col = lam;
  if (!s.delta) s.delta = static_cast<double>(s.input.rows() * s.input.cols()) / 1000.0;
  if (s.width == 0) s.width = std::min(s.input.rows(), s.input.cols());
  std::sort(s.snapshot_at.begin(), s.snapshot_at.end());
}

nlohmann::json settings_json(const CompletionSettings& s) {
  nlohmann::json j;
  j["rows"] = s.input.rows();
  j["cols"] = s.input.cols();
  j["observed"] = s.mask.size();
  j["depth"] = s.depth;
  j["width"] = s.width;
  j["reg"] = to_string(s.reg);
  j["variant"] = to_string(s.variant);
  j["lambda_row"] = s.lambda_row.value_or(0.0);
  j["lambda_col"] = s.lambda_col.value_or(0.0);
  j["lr"] = s.lr;
  j["max_iters"] = s.max_iters;
  j["delta"] = s.delta.value_or(0.0);
  j["seed"] = s.seed;
  j["init_variance"] = s.init_variance;
  j["check_every"] = s.check_every;
  j["warmup_checks"] = s.warmup_checks;
  j["log_every"] = s.log_every;
  j["track_sigmas"] = s.track_sigmas;
  j["snapshot_laplacians"] = s.snapshot_at;
  j["nmae_variant"] = to_string(s.nmae_variant);
  return j;
}

CompletionOutcome run_completion(const CompletionSettings& s, const nlohmann::json& config) {
  const Index m = s.input.rows();
  const Index n = s.input.cols();
  TrainConfig cfg;
  cfg.objective.mask = s.mask;
  cfg.objective.y = s.mask.apply(s.input);
  const double lr = *s.lambda_row;
  const double lc = *s.lambda_col;
  switch (s.reg.kind) {
    case RegKind::None:
      break;
    case RegKind::Air:
      cfg.objective.row_reg = AdaptiveRegularizer{Matrix::Zero(m, m), s.variant, Transformation::row(), lr};
      cfg.objective.col_reg = AdaptiveRegularizer{Matrix::Zero(n, n), s.variant, Transformation::column(), lc};
      break;
    case RegKind::Tv:
      cfg.objective.fixed_laps.push_back(FixedLaplacian::path(m, Side::Row, lr));
      cfg.objective.fixed_laps.push_back(FixedLaplacian::path(n, Side::Column, lc));
      break;
    case RegKind::Fixed:
      cfg.objective.fixed_laps.push_back(
          FixedLaplacian{load_matrix(s.reg.row_lap, MatrixFormat::Csv), Side::Row, lr, false});
      if (!s.reg.col_lap.empty())
        cfg.objective.fixed_laps.push_back(
            FixedLaplacian{load_matrix(s.reg.col_lap, MatrixFormat::Csv), Side::Column, lc, false});
      break;
  }
  for (const auto& fl : cfg.objective.fixed_laps) {
    const Index need = fl.side == Side::Row ? m : n;
    if (fl.lap.rows() != need || fl.lap.cols() != need)
      throw ConfigError(std::string("fixed ") + to_string(fl.side) + " Laplacian must be " + std::to_string(need) +
                        "x" + std::to_string(need));
  }
  cfg.depth = s.depth;
  cfg.width = s.width;
  cfg.init.kind = InitSpec::Kind::Gaussian;
  cfg.init.variance = s.init_variance;
  cfg.init.seed = s.seed;
  cfg.optimizer.kind = OptimizerSpec::Kind::Adam;
  cfg.optimizer.adam.lr = s.lr;
  cfg.max_iters = s.max_iters;
  cfg.delta = *s.delta;
  cfg.check_every = s.check_every;
  cfg.warmup_checks = s.warmup_checks;
  cfg.log_every = s.log_every;
  cfg.track_sigmas = s.track_sigmas;
  cfg.snapshot_at = s.snapshot_at;

  CompletionOutcome out;
  out.train = train(cfg, s.truth);

  EvalResult& ev = out.eval;
  ev.nmae_variant = to_string(s.nmae_variant);
  ev.iterations = out.train.iterations;
  ev.stop_reason = to_string(out.train.stop);
  ev.config = config;
  ev.config["resolved"] = settings_json(s);
  const Matrix& xhat = out.train.xhat;
  if (all_finite(xhat)) {
    const Vector resid = s.mask.apply(xhat) - cfg.objective.y;
    ev.mse_observed = resid.squaredNorm() / static_cast<double>(s.mask.size());
    if (s.truth && s.mask.unobserved_count() > 0) {
      ev.nmae = nmae(xhat, *s.truth, s.mask, s.nmae_variant);
      ev.mse_unobserved = mse_split(xhat, *s.truth, s.mask).unobserved;
    }
  } else {
    ev.mse_observed = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace airmc::cli
