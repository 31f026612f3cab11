#include "airmc/graph_reg.hpp"

#include <cmath>
#include <string>

#include "airmc/errors.hpp"

namespace airmc {
namespace {

void require_square(const Matrix& w, const char* where) {
  if (w.rows() != w.cols() || w.rows() < 1) {
    throw ConfigError(std::string(where) + ": parameter matrix must be square, got " +
                      std::to_string(w.rows()) + "x" + std::to_string(w.cols()));
  }
}

// Gram matrix of the rows with an exactly symmetric result.
Matrix row_gram(const Matrix& xt) {
  Matrix g = Matrix::Zero(xt.rows(), xt.rows());
  g.selfadjointView<Eigen::Lower>().rankUpdate(xt);
  return g.selfadjointView<Eigen::Lower>();
}

// D_kl = ||xt_k - xt_l||^2 from the Gram matrix.
Matrix squared_distances(const Matrix& gram) {
  const Vector d = gram.diagonal();
  Matrix dist(gram.rows(), gram.cols());
  for (Index k = 0; k < gram.rows(); ++k) {
    for (Index l = 0; l < gram.cols(); ++l) {
      dist(k, l) = (d(k) + d(l)) - 2.0 * gram(k, l);
    }
  }
  return dist;
}

}  // namespace

const char* to_string(AdjacencyVariant v) {
  switch (v) {
    case AdjacencyVariant::SymmetrizedSum:
      return "symmetrized-sum";
    case AdjacencyVariant::SymmetricExponent:
      return "symmetric-exponent";
  }
  return "unknown";
}

AdjacencyVariant parse_adjacency_variant(const std::string& s) {
  if (s == "symmetrized-sum") return AdjacencyVariant::SymmetrizedSum;
  if (s == "symmetric-exponent") return AdjacencyVariant::SymmetricExponent;
  throw ConfigError("unknown adjacency variant '" + s + "'");
}

Matrix apply_transformation(const Transformation& transform, const Matrix& x) {
  switch (transform.kind) {
    case Transformation::Kind::Row:
      return x;
    case Transformation::Kind::Column:
      return x.transpose();
    case Transformation::Kind::Block:
      break;
  }
  const Index bh = transform.block_rows;
  const Index bw = transform.block_cols;
  if (bh < 1 || bw < 1 || x.rows() % bh != 0 || x.cols() % bw != 0) {
    throw ConfigError("block transformation " + std::to_string(bh) + "x" + std::to_string(bw) +
                      " does not tile a " + std::to_string(x.rows()) + "x" +
                      std::to_string(x.cols()) + " matrix");
  }
  const Index grid_rows = x.rows() / bh;
  const Index grid_cols = x.cols() / bw;
  Matrix out(grid_rows * grid_cols, bh * bw);
  for (Index gr = 0; gr < grid_rows; ++gr) {
    for (Index gc = 0; gc < grid_cols; ++gc) {
      const Index j = gr * grid_cols + gc;
      for (Index a = 0; a < bh; ++a) {
        for (Index b = 0; b < bw; ++b) out(j, a * bw + b) = x(gr * bh + a, gc * bw + b);
      }
    }
  }
  return out;
}

LaplacianPair build_adjacency(const Matrix& w, AdjacencyVariant variant) {
  require_square(w, "build_adjacency");
  if (!w.allFinite()) throw ConfigError("build_adjacency: non-finite parameter");
  const Index m = w.rows();
  const double shift = w.maxCoeff();
  const Matrix shifted_exp = (w.array() - shift).exp().matrix();
  const double total = shifted_exp.sum();

  LaplacianPair out;
  out.a_prime = shifted_exp.transpose() / total;
  if (variant == AdjacencyVariant::SymmetrizedSum) {
    out.a = out.a_prime + out.a_prime.transpose();
  } else {
    // exp(w + w^T) / sum(exp(w)) = exp(w + w^T - shift - log(total)).
    const double log_norm = shift + std::log(total);
    out.a.resize(m, m);
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < m; ++j) out.a(i, j) = std::exp((w(i, j) + w(j, i)) - log_norm);
    }
  }

  out.lap = -out.a;
  for (Index i = 0; i < m; ++i) {
    double degree = 0.0;
    for (Index j = 0; j < m; ++j) {
      if (j != i) degree += out.a(i, j);
    }
    out.lap(i, i) = degree;
  }
  return out;
}

double dirichlet_energy(const Matrix& x, const Matrix& lap) {
  if (lap.rows() != lap.cols() || lap.rows() != x.rows()) {
    throw ConfigError("dirichlet_energy: Laplacian is " + std::to_string(lap.rows()) + "x" +
                      std::to_string(lap.cols()) + " but x has " + std::to_string(x.rows()) +
                      " rows");
  }
  return (lap * x).cwiseProduct(x).sum();
}

double reg_value(const AdaptiveRegularizer& reg, const Matrix& x) {
  const Matrix xt = apply_transformation(reg.transform, x);
  require_square(reg.w, "reg_value");
  if (reg.w.rows() != xt.rows()) {
    throw ConfigError("reg_value: w is " + std::to_string(reg.w.rows()) +
                      " wide but the transformed matrix has " + std::to_string(xt.rows()) +
                      " rows");
  }
  return dirichlet_energy(xt, build_adjacency(reg.w, reg.variant).lap);
}

RegularizerEvaluation evaluate_regularizer(const AdaptiveRegularizer& reg, const Matrix& x) {
  const Matrix xt = apply_transformation(reg.transform, x);
  require_square(reg.w, "evaluate_regularizer");
  if (reg.w.rows() != xt.rows()) {
    throw ConfigError("evaluate_regularizer: w is " + std::to_string(reg.w.rows()) +
                      " wide but the transformed matrix has " + std::to_string(xt.rows()) +
                      " rows");
  }
  RegularizerEvaluation ev;
  ev.laplacian = build_adjacency(reg.w, reg.variant);
  const Matrix lx = ev.laplacian.lap * xt;
  ev.value = lx.cwiseProduct(xt).sum();
  ev.grad_xt = 2.0 * lx;

  const Matrix dist = squared_distances(row_gram(xt));
  const auto softmax = ev.laplacian.a_prime.transpose();  // exp(w) / sum(exp(w))
  if (reg.variant == AdjacencyVariant::SymmetrizedSum) {
    ev.grad_w = ((dist.array() - ev.value) * softmax.array()).matrix();
  } else {
    ev.grad_w = (dist.array() * ev.laplacian.a.array() - ev.value * softmax.array()).matrix();
  }
  return ev;
}

Matrix grad_reg_wrt_w(const AdaptiveRegularizer& reg, const Matrix& x) {
  return evaluate_regularizer(reg, x).grad_w;
}

Matrix grad_reg_wrt_x(std::span<const AdaptiveRegularizer> regs, const Matrix& x) {
  Matrix grad = Matrix::Zero(x.rows(), x.cols());
  bool have_row = false;
  bool have_col = false;
  for (const auto& reg : regs) {
    const Matrix lap = build_adjacency(reg.w, reg.variant).lap;
    switch (reg.transform.kind) {
      case Transformation::Kind::Row:
        if (have_row) throw ConfigError("grad_reg_wrt_x: more than one row regularizer");
        have_row = true;
        if (lap.rows() != x.rows()) throw ConfigError("grad_reg_wrt_x: row Laplacian size mismatch");
        grad.noalias() += 2.0 * reg.lambda * (lap * x);
        break;
      case Transformation::Kind::Column:
        if (have_col) throw ConfigError("grad_reg_wrt_x: more than one column regularizer");
        have_col = true;
        if (lap.rows() != x.cols()) throw ConfigError("grad_reg_wrt_x: column Laplacian size mismatch");
        grad.noalias() += 2.0 * reg.lambda * (x * lap);
        break;
      case Transformation::Kind::Block:
        throw ConfigError("grad_reg_wrt_x: block transformations are not supported");
    }
  }
  return grad;
}

}  // namespace airmc
