#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "airmc/data.hpp"
#include "airmc/io.hpp"
#include "airmc/metrics.hpp"
#include "airmc/optimizer.hpp"

namespace airmc::cli {

enum class RegKind { None, Air, Tv, Fixed };

struct RegSpec {
  RegKind kind = RegKind::Air;
  std::string row_lap;  // Fixed only
  std::string col_lap;  // Fixed only, optional
};

// "air" | "none" | "tv" | "fixed:<row.csv>[,<col.csv>]"
RegSpec parse_reg_spec(const std::string& text);
std::string to_string(const RegSpec& r);

struct CompletionSettings {
  Matrix input;
  SamplingMask mask;
  std::optional<Matrix> truth;
  Index depth = 3;
  Index width = 0;  // 0: min(rows, cols)
  RegSpec reg;
  AdjacencyVariant variant = AdjacencyVariant::SymmetrizedSum;
  std::optional<double> lambda_row;  // default: (max(Y) - min(Y)) / (mn)
  std::optional<double> lambda_col;
  double lr = 1e-3;
  std::int64_t max_iters = 100000;
  std::optional<double> delta;  // default: mn / 1000
  std::uint64_t seed = 0;
  double init_variance = 1e-5;
  std::int64_t check_every = 100;
  std::int64_t warmup_checks = 10;
  std::int64_t log_every = 100;
  Index track_sigmas = 0;
  std::vector<std::int64_t> snapshot_at;
  NmaeVariant nmae_variant = NmaeVariant::Absolute;
};

// Fills every defaulted field in place.
void resolve(CompletionSettings& s);

// Resolved settings as JSON (matrices are not included).
nlohmann::json settings_json(const CompletionSettings& s);

struct CompletionOutcome {
  TrainResult train;
  EvalResult eval;
};

// Runs a resolved completion and evaluates it. `config` is echoed into the
// result in addition to the resolved settings.
CompletionOutcome run_completion(const CompletionSettings& s, const nlohmann::json& config);

}  // namespace airmc::cli
