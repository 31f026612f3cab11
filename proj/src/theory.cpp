#include "airmc/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "airmc/errors.hpp"
#include "airmc/optimizer.hpp"

namespace airmc {

ParamPack finite_diff_grad(const PackFunction& f, const ParamPack& params, double step) {
  if (!(step > 0.0)) throw ConfigError("finite_diff_grad: step must be positive");
  ParamPack probe = params;
  ParamPack grad;
  grad.reserve(params.size());
  for (std::size_t b = 0; b < params.size(); ++b) {
    Matrix g(params[b].rows(), params[b].cols());
    for (Index i = 0; i < params[b].rows(); ++i) {
      for (Index j = 0; j < params[b].cols(); ++j) {
        const double saved = probe[b](i, j);
        probe[b](i, j) = saved + step;
        const double up = f(probe);
        probe[b](i, j) = saved - step;
        const double down = f(probe);
        probe[b](i, j) = saved;
        if (!std::isfinite(up) || !std::isfinite(down)) {
          throw NumericalError("finite_diff_grad: non-finite value probing block " + std::to_string(b) +
                               " entry (" + std::to_string(i) + "," + std::to_string(j) + ")");
        }
        g(i, j) = (up - down) / (2.0 * step);
      }
    }
    grad.push_back(std::move(g));
  }
  return grad;
}

double relative_error(const Matrix& analytic, const Matrix& numeric, double floor) {
  if (analytic.rows() != numeric.rows() || analytic.cols() != numeric.cols())
    throw ConfigError("relative_error: shape mismatch");
  return (analytic - numeric).norm() / std::max(numeric.norm(), floor);
}

double check_balancedness(const FactorChain& chain) {
  chain.validate();
  if (chain.depth() < 2) throw ConfigError("check_balancedness: depth must be >= 2");
  double worst = 0.0;
  for (std::size_t l = 0; l + 1 < chain.factors.size(); ++l) {
    const Matrix& lo = chain.factors[l];
    const Matrix& hi = chain.factors[l + 1];
    const Matrix diff = hi.transpose() * hi - lo * lo.transpose();
    worst = std::max(worst, max_abs(diff));
  }
  return worst;
}

double fit_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("fit_slope: need >= 2 paired samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw ConfigError("fit_slope: degenerate abscissae");
  return sxy / sxx;
}

// --- Singular-value dynamics ------------------------------------------------

namespace {

struct SpectralState {
  std::vector<double> sigma;
  Matrix u;
  Matrix v;
  std::vector<double> rhs;
  std::vector<double> gamma;
};

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

Theorem1Report verify_theorem1(const Theorem1Config& cfg) {
  if (cfg.rows < 2 || cfg.cols < 2 || cfg.depth < 1) throw ConfigError("theorem1: bad shape");
  if (!(cfg.step > 0.0) || cfg.iters < 3 || cfg.check_stride < 1)
    throw ConfigError("theorem1: need step > 0, iters >= 3, check stride >= 1");
  const Index k_all = std::min(cfg.rows, cfg.cols);
  if (cfg.top_k < 1 || cfg.top_k > k_all) throw ConfigError("theorem1: top_k out of range");
  if (!(cfg.observed_fraction > 0.0 && cfg.observed_fraction <= 1.0))
    throw ConfigError("theorem1: observed fraction must be in (0, 1]");

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix truth(cfg.rows, cfg.cols);
  for (Index i = 0; i < truth.rows(); ++i)
    for (Index j = 0; j < truth.cols(); ++j) truth(i, j) = normal(rng);

  std::vector<Entry> all;
  for (Index i = 0; i < cfg.rows; ++i)
    for (Index j = 0; j < cfg.cols; ++j) all.push_back({i, j});
  std::shuffle(all.begin(), all.end(), rng);
  const auto n_obs = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(cfg.observed_fraction * static_cast<double>(all.size()))));
  all.resize(n_obs);

  ObjectiveConfig objective;
  objective.mask = SamplingMask(cfg.rows, cfg.cols, std::move(all));
  objective.y = objective.mask.apply(truth);
  objective.row_reg = AdaptiveRegularizer{Matrix::Zero(cfg.rows, cfg.rows), cfg.variant,
                                          Transformation::row(), cfg.lambda_row};
  objective.col_reg = AdaptiveRegularizer{Matrix::Zero(cfg.cols, cfg.cols), cfg.variant,
                                          Transformation::column(), cfg.lambda_col};

  // Well separated initial spectrum so index pairing is unambiguous.
  std::vector<double> init_sigma(static_cast<std::size_t>(k_all));
  for (Index i = 0; i < k_all; ++i)
    init_sigma[static_cast<std::size_t>(i)] = 1.0 - 0.8 * static_cast<double>(i) / static_cast<double>(k_all);
  FactorChain chain = balanced_init(cfg.rows, cfg.cols, cfg.depth, init_sigma, cfg.seed + 1);

  const double depth = static_cast<double>(cfg.depth);
  auto spectral = [&](const Evaluation& ev) {
    SpectralState st;
    SvdResult dec = svd(ev.xhat);
    const Matrix fid_grad = objective.mask.adjoint(objective.mask.apply(ev.xhat) - objective.y);
    const Matrix lap_r = build_adjacency(objective.row_reg->w, cfg.variant).lap;
    const Matrix lap_c = build_adjacency(objective.col_reg->w, cfg.variant).lap;
    for (Index k = 0; k < cfg.top_k; ++k) {
      const double s = dec.sigma[static_cast<std::size_t>(k)];
      const auto u = dec.u.col(k);
      const auto v = dec.v.col(k);
      const double gamma = cfg.lambda_row * u.dot(lap_r * u) + cfg.lambda_col * v.dot(lap_c * v);
      const double proj = u.dot(fid_grad * v);
      const double s2 = s * s;
      const double rate = -depth * std::pow(s2, 1.0 - 1.0 / depth) * proj -
                          2.0 * depth * std::pow(s2, 1.5 - 1.0 / depth) * gamma;
      st.rhs.push_back(rate);
      st.gamma.push_back(gamma);
    }
    st.sigma = std::move(dec.sigma);
    st.u = std::move(dec.u);
    st.v = std::move(dec.v);
    return st;
  };

  Theorem1Report report;
  report.config = cfg;
  report.min_gamma = std::numeric_limits<double>::infinity();

  std::vector<Matrix*> params;
  for (auto& f : chain.factors) params.push_back(&f);
  params.push_back(&objective.row_reg->w);
  params.push_back(&objective.col_reg->w);

  SpectralState before;   // t - 1
  SpectralState current;  // t
  for (std::int64_t t = 0; t <= cfg.iters; ++t) {
    Evaluation ev = evaluate(objective, chain);
    if (!std::isfinite(ev.loss.total)) throw NumericalError("theorem1: flow diverged at iteration " + std::to_string(t));
    SpectralState next = spectral(ev);

    const std::int64_t centre = t - 1;
    if (centre >= 1 && centre % cfg.check_stride == 0) {
      ++report.checks;
      for (Index k = 0; k < cfg.top_k; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        Theorem1Record rec;
        rec.iter = centre;
        rec.k = k;
        rec.sigma = current.sigma[ks];
        rec.lhs = (next.sigma[ks] - before.sigma[ks]) / (2.0 * cfg.step);
        rec.rhs = current.rhs[ks];
        rec.gamma = current.gamma[ks];
        rec.rel_error = std::abs(rec.lhs - rec.rhs) / std::max(std::abs(rec.rhs), 1e-12);
        const double align_u = std::abs(before.u.col(k).dot(next.u.col(k)));
        const double align_v = std::abs(before.v.col(k).dot(next.v.col(k)));
        rec.crossing = align_u < 0.9 || align_v < 0.9;
        report.min_gamma = std::min(report.min_gamma, rec.gamma);
        report.records.push_back(rec);
      }
    }
    before = std::move(current);
    current = std::move(next);
    if (t == cfg.iters) break;

    std::vector<const Matrix*> grads;
    for (const auto& g : ev.grad.factors) grads.push_back(&g);
    grads.push_back(&*ev.grad.w_row);
    grads.push_back(&*ev.grad.w_col);
    gd_step(params, grads, cfg.step);
  }

  std::vector<double> errors;
  for (const auto& rec : report.records) {
    if (rec.crossing) {
      ++report.excluded;
      continue;
    }
    errors.push_back(rec.rel_error);
    report.max_rel_error = std::max(report.max_rel_error, rec.rel_error);
  }
  report.median_rel_error = median(std::move(errors));
  if (report.records.empty()) report.min_gamma = 0.0;
  report.final_balancedness = cfg.depth >= 2 ? check_balancedness(chain) : 0.0;
  return report;
}

// --- Regularizer-only flow ----------------------------------------------------

Matrix theorem2_rows(Index m, Index duplicates) {
  if (m < 1) throw ConfigError("theorem2_rows: m must be positive");
  if (duplicates < 0 || duplicates > m) throw ConfigError("theorem2_rows: duplicates must be in [0, m]");
  const Index distinct = duplicates <= 1 ? m : m - duplicates + 1;
  // Distinct prototypes: a dominant coordinate plus an uneven secondary one so
  // that pairwise distances differ.
  Matrix proto(distinct, distinct);
  for (Index j = 0; j < distinct; ++j) {
    for (Index i = 0; i < distinct; ++i) {
      double v = 0.05;
      if (i == j) v += 1.0;
      if (distinct > 2 && i == (j + 1) % distinct) v += 0.3 * static_cast<double>(j) / static_cast<double>(distinct);
      proto(j, i) = v;
    }
    proto.row(j).normalize();
  }
  Matrix rows(m, distinct);
  const Index lead = std::max<Index>(duplicates, 1);
  for (Index r = 0; r < m; ++r) rows.row(r) = proto.row(r < lead ? 0 : r - lead + 1);
  return rows;
}

Theorem2Report verify_theorem2(const Matrix& rows, const Theorem2Config& cfg) {
  if (rows.rows() < 2) throw ConfigError("theorem2: need at least two rows");
  if (!(cfg.step > 0.0) || cfg.iters < 3) throw ConfigError("theorem2: need step > 0 and iters >= 3");
  if (cfg.snapshot_every < 1) throw ConfigError("theorem2: snapshot stride must be >= 1");
  for (Index k = 0; k < rows.rows(); ++k) {
    if (std::abs(rows.row(k).norm() - 1.0) > 1e-9)
      throw ConfigError("theorem2: row " + std::to_string(k) + " does not have unit norm");
    if ((rows.row(k).array() <= 0.0).any())
      throw ConfigError("theorem2: row " + std::to_string(k) + " has a non-positive entry");
  }

  Theorem2Report rep;
  rep.config = cfg;
  rep.rows_matrix = rows;
  const Index m = rows.rows();
  rep.m = m;
  rep.pair_class.assign(static_cast<std::size_t>(m), std::vector<int>(static_cast<std::size_t>(m), 0));
  bool has_s1 = false;
  for (Index k = 0; k < m; ++k) {
    for (Index l = 0; l < m; ++l) {
      int cls = 0;
      if (k == l) {
        cls = 2;
      } else if ((rows.row(k) - rows.row(l)).norm() <= 1e-12) {
        cls = 1;
        if (k < l) ++rep.s;
      } else {
        has_s1 = true;
      }
      rep.pair_class[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] = cls;
    }
  }
  rep.gamma = 2.0 / static_cast<double>(m + 2 * rep.s);
  rep.target.resize(m, m);
  for (Index k = 0; k < m; ++k)
    for (Index l = 0; l < m; ++l)
      rep.target(k, l) = rep.pair_class[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] == 0 ? 0.0 : rep.gamma;

  AdaptiveRegularizer reg{Matrix::Constant(m, m, cfg.epsilon), cfg.variant, Transformation::row(), 1.0};
  Matrix initial_gap;
  Matrix crossed = Matrix::Constant(m, m, -1.0);

  for (std::int64_t it = 0;; ++it) {
    const RegularizerEvaluation ev = evaluate_regularizer(reg, rows);
    const Matrix& a = ev.laplacian.a;
    const double t = static_cast<double>(it) * cfg.step;
    const Matrix err = (a - rep.target).cwiseAbs();
    if (it == 0) {
      rep.a_initial = a;
      initial_gap = err;
    }
    for (Index k = 0; k < m; ++k) {
      for (Index l = 0; l < m; ++l) {
        if (crossed(k, l) < 0.0 && err(k, l) <= 0.5 * initial_gap(k, l)) crossed(k, l) = t;
      }
    }
    rep.times.push_back(t);
    rep.reg_values.push_back(ev.value);
    rep.max_error.push_back(err.maxCoeff());
    rep.max_symmetry_drift = std::max(rep.max_symmetry_drift, max_abs(reg.w - reg.w.transpose()));
    if (it % cfg.snapshot_every == 0 || it == cfg.iters) {
      rep.snapshot_iters.push_back(it);
      rep.snapshots.push_back(a);
    }
    if (it == cfg.iters) {
      rep.a_final = a;
      break;
    }
    if (!ev.grad_w.allFinite()) throw NumericalError("theorem2: non-finite gradient at iteration " + std::to_string(it));
    reg.w -= cfg.step * ev.grad_w;
  }

  auto class_time = [&](int cls) {
    double worst = -1.0;
    bool any = false;
    for (Index k = 0; k < m; ++k) {
      for (Index l = 0; l < m; ++l) {
        if (rep.pair_class[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] != cls) continue;
        any = true;
        if (crossed(k, l) < 0.0) return -1.0;
        worst = std::max(worst, crossed(k, l));
      }
    }
    return any ? worst : -1.0;
  };
  rep.half_gap_time_s1 = class_time(0);
  rep.half_gap_time_s2 = class_time(1);

  const Matrix final_err = (rep.a_final - rep.target).cwiseAbs();
  for (Index k = 0; k < m; ++k) {
    for (Index l = 0; l < m; ++l) {
      const double e = final_err(k, l);
      switch (rep.pair_class[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)]) {
        case 0:
          rep.final_error_s1 = std::max(rep.final_error_s1, e);
          break;
        case 1:
          rep.final_error_s2 = std::max(rep.final_error_s2, e);
          break;
        default:
          rep.final_error_diag = std::max(rep.final_error_diag, e);
      }
    }
  }

  // Log-linear fit of the error over the final third of the run.
  std::vector<double> xs;
  std::vector<double> ys;
  const std::size_t start = rep.times.size() * 2 / 3;
  for (std::size_t i = start; i < rep.times.size(); ++i) {
    if (rep.max_error[i] > 0.0) {
      xs.push_back(rep.times[i]);
      ys.push_back(std::log(rep.max_error[i]));
    }
  }
  rep.decay_rate = xs.size() >= 2 ? -fit_slope(xs, ys) : 0.0;
  rep.decay_flag = has_s1 && !(rep.decay_rate > 0.0);
  return rep;
}

CorollaryCheck check_corollary1(const Theorem2Report& report) {
  CorollaryCheck out;
  const auto& r = report.reg_values;
  if (r.empty()) {
    out.detail = "empty series";
    out.non_negative = false;
    return out;
  }
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] < -1e-12) {
      out.non_negative = false;
      out.detail += "negative value at step " + std::to_string(i) + "; ";
      break;
    }
  }
  for (std::size_t i = 1; i < r.size(); ++i) {
    if (r[i] > r[i - 1] + 1e-10) {
      out.non_increasing = false;
      out.detail += "increase at step " + std::to_string(i) + "; ";
      break;
    }
  }
  const double m = static_cast<double>(report.m);
  out.bound_at_zero = r.front() <= 2.0 * m * (m - 1.0) / report.gamma;
  if (!out.bound_at_zero) out.detail += "initial value exceeds the bound; ";

  bool has_s1 = false;
  for (const auto& row : report.pair_class)
    for (int c : row) has_s1 = has_s1 || c == 0;
  if (has_s1) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t i = r.size() * 2 / 3; i < r.size(); ++i) {
      if (r[i] > 0.0) {
        xs.push_back(report.times[i]);
        ys.push_back(std::log(r[i]));
      }
    }
    if (xs.size() >= 2) {
      out.tail_slope = fit_slope(xs, ys);
      out.tail_decreasing = out.tail_slope < 0.0;
    } else {
      out.tail_decreasing = false;
    }
    if (!out.tail_decreasing) out.detail += "log tail is not decreasing; ";
  }
  return out;
}

}  // namespace airmc

namespace airmc {

GradcheckSuite gradcheck_suite(std::uint64_t seed, int instances, double step) {
  if (instances < 1) throw ConfigError("gradcheck: need at least one instance");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> dim(2, 8);
  std::uniform_real_distribution<double> lam(0.1, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  GradcheckSuite suite;
  for (int i = 0; i < instances; ++i) {
    GradcheckCase gc;
    gc.rows = dim(rng);
    gc.cols = dim(rng);
    gc.width = dim(rng);
    gc.depth = 1 + i % 3;
    gc.variant = (i / 3) % 2 == 0 ? AdjacencyVariant::SymmetrizedSum : AdjacencyVariant::SymmetricExponent;
    gc.fixed_lap = i % 2 == 1;

    ShapePlan plan{gc.rows, gc.cols, gc.depth, gc.width, true, true};
    InitResult init = gaussian_init(plan, 0.25, rng());

    std::vector<Entry> obs;
    std::bernoulli_distribution keep(0.6);
    for (Index r = 0; r < gc.rows; ++r)
      for (Index c = 0; c < gc.cols; ++c)
        if (keep(rng)) obs.push_back({r, c});
    if (obs.empty()) obs.push_back({0, 0});

    ObjectiveConfig objective;
    objective.mask = SamplingMask(gc.rows, gc.cols, std::move(obs));
    objective.y.resize(objective.mask.size());
    for (Index k = 0; k < objective.y.size(); ++k) objective.y[k] = normal(rng);
    objective.row_reg = AdaptiveRegularizer{*init.w_row, gc.variant, Transformation::row(), lam(rng)};
    objective.col_reg = AdaptiveRegularizer{*init.w_col, gc.variant, Transformation::column(), lam(rng)};
    if (gc.fixed_lap) objective.fixed_laps.push_back(FixedLaplacian::path(gc.rows, Side::Row, lam(rng)));

    const auto n_factors = init.chain.factors.size();
    ParamPack pack = init.chain.factors;
    pack.push_back(objective.row_reg->w);
    pack.push_back(objective.col_reg->w);

    auto loss = [&](const ParamPack& p) {
      ObjectiveConfig o = objective;
      o.row_reg->w = p[n_factors];
      o.col_reg->w = p[n_factors + 1];
      FactorChain chain{ParamPack(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(n_factors))};
      return total_loss(o, chain).total;
    };
    const ParamPack numeric = finite_diff_grad(loss, pack, step);
    ChainGradient analytic = grad_chain(objective, init.chain);
    ParamPack flat = std::move(analytic.factors);
    flat.push_back(std::move(*analytic.w_row));
    flat.push_back(std::move(*analytic.w_col));
    for (std::size_t b = 0; b < flat.size(); ++b) {
      const double e = relative_error(flat[b], numeric[b]);
      gc.block_errors.push_back(e);
      gc.max_rel_error = std::max(gc.max_rel_error, e);
    }
    suite.max_rel_error = std::max(suite.max_rel_error, gc.max_rel_error);
    suite.cases.push_back(std::move(gc));
  }
  return suite;
}

}  // namespace airmc
