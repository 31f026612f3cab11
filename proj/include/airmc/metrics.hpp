#pragma once

#include <string>

#include "airmc/dense.hpp"
#include "airmc/dmf_model.hpp"

namespace airmc {

// Absolute is the default: mean absolute error over the unobserved entries
// divided by the truth range. Squared replaces |e| with e^2.
enum class NmaeVariant { Absolute, Squared };

const char* to_string(NmaeVariant v);
NmaeVariant parse_nmae_variant(const std::string& s);

double nmae(const Matrix& xhat, const Matrix& truth, const SamplingMask& mask,
            NmaeVariant variant = NmaeVariant::Absolute);

struct MseSplit {
  double observed = 0.0;
  double unobserved = 0.0;
};

// Mean squared error over the observed and unobserved index classes; throws
// ConfigError if either class is empty.
MseSplit mse_split(const Matrix& xhat, const Matrix& truth, const SamplingMask& mask);

}  // namespace airmc
