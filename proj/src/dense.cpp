#include "airmc/dense.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "airmc/errors.hpp"

namespace airmc {
namespace {

constexpr int kMaxSweeps = 100;

using ColMatrix = Eigen::MatrixXd;

// Columns this short are rounding noise left by rank deficiency: they carry no
// direction worth orthogonalizing and would keep the sweeps from terminating.
double negligible_norm(const ColMatrix& work) {
  return work.norm() * std::numeric_limits<double>::epsilon() * static_cast<double>(work.cols());
}

// Orthogonalizes the columns of `work` in place (tall or square input),
// accumulating the right rotations into `v` when requested.
void jacobi_sweeps(ColMatrix& work, ColMatrix* v) {
  const Index n = work.cols();
  const double tol = std::numeric_limits<double>::epsilon() * std::sqrt(static_cast<double>(work.rows()));
  const double tiny = negligible_norm(work);
  const double tiny2 = tiny * tiny;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (Index p = 0; p + 1 < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double alpha = work.col(p).squaredNorm();
        const double beta = work.col(q).squaredNorm();
        if (alpha <= tiny2 || beta <= tiny2) continue;
        const double gamma = work.col(p).dot(work.col(q));
        if (std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Index i = 0; i < work.rows(); ++i) {
          const double wp = work(i, p);
          const double wq = work(i, q);
          work(i, p) = c * wp - s * wq;
          work(i, q) = s * wp + c * wq;
        }
        if (v != nullptr) {
          for (Index i = 0; i < v->rows(); ++i) {
            const double vp = (*v)(i, p);
            const double vq = (*v)(i, q);
            (*v)(i, p) = c * vp - s * vq;
            (*v)(i, q) = s * vp + c * vq;
          }
        }
      }
    }
    if (!rotated) return;
  }
  throw NumericalError("svd: one-sided Jacobi did not converge within " +
                       std::to_string(kMaxSweeps) + " sweeps");
}

void check_input(const Matrix& x) {
  if (x.rows() < 1 || x.cols() < 1) throw ConfigError("svd: empty matrix");
  if (!all_finite(x)) throw ConfigError("svd: non-finite entry");
}

// Stable descending order of the column norms.
std::vector<Index> descending_order(const std::vector<double>& norms) {
  std::vector<Index> order(norms.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return norms[a] > norms[b]; });
  return order;
}

// Fills the columns of `basis` flagged in `missing` with unit vectors
// orthogonal to every other column (two rounds of Gram-Schmidt against the
// coordinate vector with the largest residual).
void complete_orthonormal(ColMatrix& basis, const std::vector<bool>& missing) {
  const Index m = basis.rows();
  std::vector<bool> filled(missing.size());
  for (std::size_t j = 0; j < missing.size(); ++j) filled[j] = !missing[j];
  for (std::size_t j = 0; j < missing.size(); ++j) {
    if (!missing[j]) continue;
    Eigen::VectorXd best;
    double best_norm = -1.0;
    for (Index e = 0; e < m; ++e) {
      Eigen::VectorXd cand = Eigen::VectorXd::Unit(m, e);
      for (int round = 0; round < 2; ++round) {
        for (std::size_t k = 0; k < filled.size(); ++k) {
          if (!filled[k]) continue;
          cand -= basis.col(static_cast<Index>(k)).dot(cand) * basis.col(static_cast<Index>(k));
        }
      }
      const double nrm = cand.norm();
      if (nrm > best_norm) {
        best_norm = nrm;
        best = cand;
      }
      if (best_norm > 0.5) break;
    }
    basis.col(static_cast<Index>(j)) = best / best_norm;
    filled[j] = true;
  }
}

}  // namespace

double max_abs(const Matrix& x) { return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff(); }

bool all_finite(const Matrix& x) { return x.allFinite(); }

SvdResult svd(const Matrix& x) {
  check_input(x);
  const bool wide = x.rows() < x.cols();
  ColMatrix work = wide ? ColMatrix(x.transpose()) : ColMatrix(x);
  const Index k = work.cols();
  ColMatrix right = ColMatrix::Identity(k, k);
  const double tiny = negligible_norm(work);
  jacobi_sweeps(work, &right);

  std::vector<double> norms(static_cast<std::size_t>(k));
  for (Index j = 0; j < k; ++j) norms[static_cast<std::size_t>(j)] = work.col(j).norm();
  const auto order = descending_order(norms);

  ColMatrix left(work.rows(), k);
  ColMatrix rv(k, k);
  std::vector<double> sigma(static_cast<std::size_t>(k));
  std::vector<bool> missing(static_cast<std::size_t>(k), false);
  for (Index j = 0; j < k; ++j) {
    const Index src = order[static_cast<std::size_t>(j)];
    const double s = norms[static_cast<std::size_t>(src)];
    sigma[static_cast<std::size_t>(j)] = s;
    rv.col(j) = right.col(src);
    if (s > tiny) {
      left.col(j) = work.col(src) / s;
    } else {
      left.col(j).setZero();
      missing[static_cast<std::size_t>(j)] = true;
    }
  }
  complete_orthonormal(left, missing);

  SvdResult out;
  out.sigma = std::move(sigma);
  if (wide) {
    out.u = rv;
    out.v = left;
  } else {
    out.u = left;
    out.v = rv;
  }
  return out;
}

std::vector<double> singular_values(const Matrix& x) {
  check_input(x);
  ColMatrix work = x.rows() < x.cols() ? ColMatrix(x.transpose()) : ColMatrix(x);
  jacobi_sweeps(work, nullptr);
  std::vector<double> sigma(static_cast<std::size_t>(work.cols()));
  for (Index j = 0; j < work.cols(); ++j) sigma[static_cast<std::size_t>(j)] = work.col(j).norm();
  std::stable_sort(sigma.begin(), sigma.end(), std::greater<>());
  return sigma;
}

}  // namespace airmc
