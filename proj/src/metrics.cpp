#include "airmc/metrics.hpp"

#include <cmath>

#include "airmc/errors.hpp"

namespace airmc {
namespace {

void require_shapes(const Matrix& xhat, const Matrix& truth, const SamplingMask& mask) {
  if (xhat.rows() != truth.rows() || xhat.cols() != truth.cols() || xhat.rows() != mask.rows() ||
      xhat.cols() != mask.cols())
    throw ConfigError("metric: estimate, truth and mask shapes differ");
}

}  // namespace

const char* to_string(NmaeVariant v) { return v == NmaeVariant::Absolute ? "absolute" : "squared"; }

NmaeVariant parse_nmae_variant(const std::string& s) {
  if (s == "absolute") return NmaeVariant::Absolute;
  if (s == "squared") return NmaeVariant::Squared;
  throw ConfigError("unknown NMAE variant '" + s + "'");
}

double nmae(const Matrix& xhat, const Matrix& truth, const SamplingMask& mask, NmaeVariant variant) {
  require_shapes(xhat, truth, mask);
  if (mask.unobserved_count() == 0) throw ConfigError("nmae: no unobserved entries");
  const double range = truth.maxCoeff() - truth.minCoeff();
  if (!(range > 0.0)) throw ConfigError("nmae: ground truth has zero range");
  Matrix err = xhat - truth;
  for (const Entry& e : mask.observed()) err(e.row, e.col) = 0.0;
  const double sum = variant == NmaeVariant::Absolute ? err.cwiseAbs().sum() : err.squaredNorm();
  return sum / (static_cast<double>(mask.unobserved_count()) * range);
}

MseSplit mse_split(const Matrix& xhat, const Matrix& truth, const SamplingMask& mask) {
  require_shapes(xhat, truth, mask);
  if (mask.unobserved_count() == 0) throw ConfigError("mse_split: no unobserved entries");
  Matrix err = xhat - truth;
  double obs = 0.0;
  for (const Entry& e : mask.observed()) {
    obs += err(e.row, e.col) * err(e.row, e.col);
    err(e.row, e.col) = 0.0;
  }
  return {obs / static_cast<double>(mask.size()), err.squaredNorm() / static_cast<double>(mask.unobserved_count())};
}

}  // namespace airmc
