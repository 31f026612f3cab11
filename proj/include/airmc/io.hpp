#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

#include "airmc/dense.hpp"
#include "airmc/optimizer.hpp"

namespace airmc {

enum class MatrixFormat { Csv, Pgm };

MatrixFormat parse_matrix_format(const std::string& s);
// ".pgm" (any case) is Pgm, anything else Csv.
MatrixFormat format_from_path(const std::string& path);

/// csv: comma-separated numeric rows, no header, blank lines ignored.
/// pgm: plain P2, values divided by maxval.
/// Throws ParseError (with line number) on ragged rows, bad tokens, non-finite
/// values or unsupported magic; IoError if the file cannot be opened.
Matrix load_matrix(const std::string& path, MatrixFormat format);

/// csv values are written in shortest round-trip form. pgm clamps to [0, 1]
/// and quantizes to maxval 255.
void save_matrix(const std::string& path, const Matrix& m, MatrixFormat format);

// Shortest decimal text that parses back to exactly the same double.
std::string format_number(double v);

struct EvalResult {
  std::optional<double> nmae;
  std::string nmae_variant = "absolute";
  double mse_observed = 0.0;
  std::optional<double> mse_unobserved;
  std::int64_t iterations = 0;
  std::string stop_reason;
  nlohmann::json config = nlohmann::json::object();
};

nlohmann::json to_json(const EvalResult& r);

struct OutputPaths {
  std::string json;          // empty: skipped
  std::string trajectory;    // empty: skipped
  std::string snapshot_dir;  // empty: skipped
};

/// Writes the result JSON, the trajectory CSV
///   iter,loss,fidelity,reg_row,reg_col,mse_obs,mse_unobs,sigma_1..sigma_K
/// and A_row_<iter>.csv / A_col_<iter>.csv snapshots. Absent values are
/// written as empty fields.
void write_outputs(const EvalResult& result, const TrajectoryLog& log, const OutputPaths& paths);

void write_text(const std::string& path, const std::string& text);
void write_trajectory_csv(const std::string& path, const TrajectoryLog& log);

}  // namespace airmc
