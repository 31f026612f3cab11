#include "airmc/dmf_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "airmc/errors.hpp"

namespace airmc {
namespace {

std::string shape(const Matrix& x) {
  return std::to_string(x.rows()) + "x" + std::to_string(x.cols());
}

// Haar-distributed orthogonal matrix from the QR factorization of a Gaussian
// draw, with the sign convention diag(R) > 0.
Eigen::MatrixXd random_orthogonal(Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd g(dim, dim);
  for (Index i = 0; i < dim; ++i) {
    for (Index j = 0; j < dim; ++j) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd& r = qr.matrixQR();
  for (Index j = 0; j < dim; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

}  // namespace

// --- SamplingMask -----------------------------------------------------------

SamplingMask::SamplingMask(Index rows, Index cols, std::vector<Entry> observed)
    : rows_(rows), cols_(cols), observed_(std::move(observed)) {
  if (rows_ < 1 || cols_ < 1) throw ConfigError("mask shape must be positive");
  if (observed_.empty()) throw ConfigError("mask has no observed entries");
  std::sort(observed_.begin(), observed_.end());
  for (std::size_t k = 0; k < observed_.size(); ++k) {
    const Entry& e = observed_[k];
    if (e.row < 0 || e.row >= rows_ || e.col < 0 || e.col >= cols_) {
      throw ConfigError("mask entry (" + std::to_string(e.row) + "," + std::to_string(e.col) +
                        ") outside " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }
    if (k > 0 && observed_[k - 1] == e) {
      throw ConfigError("duplicate mask entry (" + std::to_string(e.row) + "," +
                        std::to_string(e.col) + ")");
    }
  }
}

SamplingMask SamplingMask::full(Index rows, Index cols) {
  std::vector<Entry> all;
  all.reserve(static_cast<std::size_t>(rows * cols));
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) all.push_back({i, j});
  }
  return SamplingMask(rows, cols, std::move(all));
}

SamplingMask SamplingMask::from_indicator(const Matrix& indicator) {
  std::vector<Entry> obs;
  for (Index i = 0; i < indicator.rows(); ++i) {
    for (Index j = 0; j < indicator.cols(); ++j) {
      if (indicator(i, j) != 0.0) obs.push_back({i, j});
    }
  }
  return SamplingMask(indicator.rows(), indicator.cols(), std::move(obs));
}

void SamplingMask::require_shape(const Matrix& x, const char* where) const {
  if (x.rows() != rows_ || x.cols() != cols_) {
    throw ConfigError(std::string(where) + ": matrix is " + shape(x) + " but the mask is " +
                      std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Vector SamplingMask::apply(const Matrix& x) const {
  require_shape(x, "apply_mask");
  Vector out(size());
  for (std::size_t k = 0; k < observed_.size(); ++k) {
    out(static_cast<Index>(k)) = x(observed_[k].row, observed_[k].col);
  }
  return out;
}

Matrix SamplingMask::adjoint(const Vector& values) const {
  if (values.size() != size()) throw ConfigError("mask adjoint: value count mismatch");
  Matrix out = Matrix::Zero(rows_, cols_);
  for (std::size_t k = 0; k < observed_.size(); ++k) {
    out(observed_[k].row, observed_[k].col) = values(static_cast<Index>(k));
  }
  return out;
}

Matrix SamplingMask::indicator() const {
  Matrix out = Matrix::Zero(rows_, cols_);
  for (const auto& e : observed_) out(e.row, e.col) = 1.0;
  return out;
}

// --- FactorChain ------------------------------------------------------------

void FactorChain::validate() const {
  if (factors.empty()) throw ConfigError("factor chain is empty");
  for (std::size_t l = 0; l + 1 < factors.size(); ++l) {
    if (factors[l + 1].cols() != factors[l].rows()) {
      throw ConfigError("factor " + std::to_string(l + 1) + " is " + shape(factors[l + 1]) +
                        " but factor " + std::to_string(l) + " is " + shape(factors[l]));
    }
  }
}

Matrix forward_product(const FactorChain& chain) {
  chain.validate();
  Matrix x = chain.factors.back();
  for (std::size_t l = chain.factors.size() - 1; l-- > 0;) x = x * chain.factors[l];
  return x;
}

// --- Fixed Laplacians -------------------------------------------------------

const char* to_string(Side s) { return s == Side::Row ? "row" : "column"; }

Matrix path_laplacian(Index size) {
  Matrix lap = Matrix::Zero(size, size);
  for (Index i = 0; i + 1 < size; ++i) {
    lap(i, i) += 1.0;
    lap(i + 1, i + 1) += 1.0;
    lap(i, i + 1) = -1.0;
    lap(i + 1, i) = -1.0;
  }
  return lap;
}

FixedLaplacian FixedLaplacian::path(Index size, Side side, double weight) {
  return FixedLaplacian{path_laplacian(size), side, weight, true};
}

Matrix FixedLaplacian::apply(const Matrix& x) const {
  const Index need = side == Side::Row ? x.rows() : x.cols();
  if (lap.rows() != need || lap.cols() != need) {
    throw ConfigError(std::string("fixed ") + to_string(side) + " Laplacian is " + shape(lap) +
                      " but the matrix is " + shape(x));
  }
  if (!path_graph) return side == Side::Row ? Matrix(lap * x) : Matrix(x * lap);

  Matrix out(x.rows(), x.cols());
  if (side == Side::Row) {
    const Index m = x.rows();
    for (Index i = 0; i < m; ++i) {
      out.row(i) = lap(i, i) * x.row(i);
      if (i > 0) out.row(i) -= x.row(i - 1);
      if (i + 1 < m) out.row(i) -= x.row(i + 1);
    }
  } else {
    const Index n = x.cols();
    for (Index i = 0; i < x.rows(); ++i) {
      for (Index j = 0; j < n; ++j) {
        double v = lap(j, j) * x(i, j);
        if (j > 0) v -= x(i, j - 1);
        if (j + 1 < n) v -= x(i, j + 1);
        out(i, j) = v;
      }
    }
  }
  return out;
}

double FixedLaplacian::energy(const Matrix& x) const { return apply(x).cwiseProduct(x).sum(); }

// --- Objective --------------------------------------------------------------

void ObjectiveConfig::validate() const {
  if (y.size() != mask.size()) {
    throw ConfigError("observation vector has " + std::to_string(y.size()) +
                      " entries but the mask observes " + std::to_string(mask.size()));
  }
  if (!y.allFinite()) throw ConfigError("observation vector has non-finite entries");
  if (row_reg) {
    if (row_reg->transform.kind != Transformation::Kind::Row)
      throw ConfigError("row regularizer must use the row transformation");
    if (row_reg->w.rows() != mask.rows() || row_reg->w.cols() != mask.rows())
      throw ConfigError("row regularizer parameter must be " + std::to_string(mask.rows()) +
                        "x" + std::to_string(mask.rows()));
    if (!(row_reg->lambda >= 0.0)) throw ConfigError("row regularizer weight must be >= 0");
  }
  if (col_reg) {
    if (col_reg->transform.kind != Transformation::Kind::Column)
      throw ConfigError("column regularizer must use the column transformation");
    if (col_reg->w.rows() != mask.cols() || col_reg->w.cols() != mask.cols())
      throw ConfigError("column regularizer parameter must be " + std::to_string(mask.cols()) +
                        "x" + std::to_string(mask.cols()));
    if (!(col_reg->lambda >= 0.0)) throw ConfigError("column regularizer weight must be >= 0");
  }
  for (const auto& f : fixed_laps) {
    if (!(f.weight >= 0.0)) throw ConfigError("fixed Laplacian weight must be >= 0");
    const Index need = f.side == Side::Row ? mask.rows() : mask.cols();
    if (f.lap.rows() != need || f.lap.cols() != need)
      throw ConfigError(std::string("fixed ") + to_string(f.side) + " Laplacian must be " +
                        std::to_string(need) + "x" + std::to_string(need));
  }
}

double default_reg_weight(const SamplingMask& mask, const Vector& y) {
  if (y.size() == 0) throw ConfigError("default_reg_weight: no observations");
  return (y.maxCoeff() - y.minCoeff()) / static_cast<double>(mask.rows() * mask.cols());
}

Evaluation evaluate(const ObjectiveConfig& cfg, const FactorChain& chain) {
  cfg.validate();
  chain.validate();
  if (chain.rows() != cfg.mask.rows() || chain.cols() != cfg.mask.cols()) {
    throw ConfigError("factor product is " + std::to_string(chain.rows()) + "x" +
                      std::to_string(chain.cols()) + " but the mask is " +
                      std::to_string(cfg.mask.rows()) + "x" + std::to_string(cfg.mask.cols()));
  }
  const std::size_t depth = chain.factors.size();

  // prefix[l] = W[l] * ... * W[0]
  std::vector<Matrix> prefix(depth);
  prefix[0] = chain.factors[0];
  for (std::size_t l = 1; l < depth; ++l) prefix[l].noalias() = chain.factors[l] * prefix[l - 1];

  Evaluation ev;
  ev.xhat = prefix.back();
  const Vector residual = cfg.mask.apply(ev.xhat) - cfg.y;
  ev.loss.fidelity = 0.5 * residual.squaredNorm();
  Matrix g = cfg.mask.adjoint(residual);

  if (cfg.row_reg) {
    const auto& reg = *cfg.row_reg;
    if (reg.lambda != 0.0) {
      const RegularizerEvaluation r = evaluate_regularizer(reg, ev.xhat);
      ev.raw_reg_row = r.value;
      ev.loss.reg_row = reg.lambda * r.value;
      g.noalias() += reg.lambda * r.grad_xt;
      ev.grad.w_row = reg.lambda * r.grad_w;
    } else {
      ev.raw_reg_row = reg_value(reg, ev.xhat);
      ev.grad.w_row = Matrix::Zero(reg.w.rows(), reg.w.cols());
    }
  }
  if (cfg.col_reg) {
    const auto& reg = *cfg.col_reg;
    if (reg.lambda != 0.0) {
      const RegularizerEvaluation r = evaluate_regularizer(reg, ev.xhat);
      ev.raw_reg_col = r.value;
      ev.loss.reg_col = reg.lambda * r.value;
      g.noalias() += reg.lambda * r.grad_xt.transpose();
      ev.grad.w_col = reg.lambda * r.grad_w;
    } else {
      ev.raw_reg_col = reg_value(reg, ev.xhat);
      ev.grad.w_col = Matrix::Zero(reg.w.rows(), reg.w.cols());
    }
  }
  for (const auto& f : cfg.fixed_laps) {
    if (f.weight == 0.0) continue;
    const Matrix lx = f.apply(ev.xhat);
    ev.loss.fixed += f.weight * lx.cwiseProduct(ev.xhat).sum();
    g.noalias() += (2.0 * f.weight) * lx;
  }
  ev.loss.total = ev.loss.fidelity + ev.loss.reg_row + ev.loss.reg_col + ev.loss.fixed;

  // Backpropagate G through the product: grad W[l] = B_l * prefix[l-1]^T,
  // B_{l-1} = W[l]^T * B_l, starting from B_{L-1} = G.
  ev.grad.factors.resize(depth);
  Matrix back = std::move(g);
  for (std::size_t l = depth - 1; l > 0; --l) {
    ev.grad.factors[l].noalias() = back * prefix[l - 1].transpose();
    Matrix next = chain.factors[l].transpose() * back;
    back = std::move(next);
  }
  ev.grad.factors[0] = std::move(back);
  return ev;
}

LossParts total_loss(const ObjectiveConfig& cfg, const FactorChain& chain) {
  return evaluate(cfg, chain).loss;
}

ChainGradient grad_chain(const ObjectiveConfig& cfg, const FactorChain& chain) {
  return std::move(evaluate(cfg, chain).grad);
}

// --- Initialization ---------------------------------------------------------

Index ShapePlan::resolved_width() const { return width > 0 ? width : std::min(rows, cols); }

InitResult gaussian_init(const ShapePlan& plan, double variance, std::uint64_t seed) {
  if (!(variance > 0.0)) throw ConfigError("gaussian_init: variance must be positive");
  if (plan.rows < 1 || plan.cols < 1 || plan.depth < 1)
    throw ConfigError("gaussian_init: rows, cols and depth must be positive");
  const Index width = plan.resolved_width();
  if (width < 1) throw ConfigError("gaussian_init: width must be positive");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(variance));
  auto draw = [&](Index r, Index c) {
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i) {
      for (Index j = 0; j < c; ++j) m(i, j) = normal(rng);
    }
    return m;
  };

  InitResult out;
  out.chain.factors.reserve(static_cast<std::size_t>(plan.depth));
  for (Index l = 0; l < plan.depth; ++l) {
    const Index in = l == 0 ? plan.cols : width;
    const Index outdim = l == plan.depth - 1 ? plan.rows : width;
    out.chain.factors.push_back(draw(outdim, in));
  }
  if (plan.row_reg) out.w_row = draw(plan.rows, plan.rows);
  if (plan.col_reg) out.w_col = draw(plan.cols, plan.cols);
  return out;
}

FactorChain balanced_init(Index rows, Index cols, Index depth, std::span<const double> singular_values,
                          std::uint64_t seed) {
  if (rows < 1 || cols < 1 || depth < 1)
    throw ConfigError("balanced_init: rows, cols and depth must be positive");
  const Index k = std::min(rows, cols);
  if (static_cast<Index>(singular_values.size()) != k) {
    throw ConfigError("balanced_init: expected " + std::to_string(k) + " singular values, got " +
                      std::to_string(singular_values.size()));
  }
  Vector root(k);
  for (Index i = 0; i < k; ++i) {
    const double s = singular_values[static_cast<std::size_t>(i)];
    if (!(s >= 0.0) || !std::isfinite(s))
      throw ConfigError("balanced_init: singular values must be finite and non-negative");
    root(i) = std::pow(s, 1.0 / static_cast<double>(depth));
  }

  std::mt19937_64 rng(seed);
  // q[0] spans the input side (cols), q[depth] the output side (rows).
  std::vector<Eigen::MatrixXd> q(static_cast<std::size_t>(depth + 1));
  q[0] = random_orthogonal(cols, rng).leftCols(k);
  for (Index l = 1; l < depth; ++l) q[static_cast<std::size_t>(l)] = random_orthogonal(k, rng);
  q[static_cast<std::size_t>(depth)] = random_orthogonal(rows, rng).leftCols(k);

  FactorChain chain;
  for (Index l = 0; l < depth; ++l) {
    const auto& lhs = q[static_cast<std::size_t>(l + 1)];
    const auto& rhs = q[static_cast<std::size_t>(l)];
    chain.factors.emplace_back(lhs * root.asDiagonal() * rhs.transpose());
  }
  return chain;
}

}  // namespace airmc
