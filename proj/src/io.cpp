#include "airmc/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "airmc/errors.hpp"

namespace airmc {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

Matrix load_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    for (;;) {
      const std::size_t pos = line.find(',', start);
      const std::string tok = trim(line.substr(start, pos - start));
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError(path, lineno, "not a number: '" + tok + "'");
      if (!std::isfinite(v)) throw ParseError(path, lineno, "non-finite value '" + tok + "'");
      row.push_back(v);
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(path, lineno,
                       "expected " + std::to_string(rows.front().size()) + " values, found " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path, lineno == 0 ? 1 : lineno, "no data");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

Matrix load_pgm(const std::string& path) {
  std::ifstream in = open_in(path);
  struct Token {
    std::string text;
    std::size_t line;
  };
  std::vector<Token> tokens;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    std::istringstream ss(line.substr(0, hash));
    std::string tok;
    while (ss >> tok) tokens.push_back({tok, lineno});
  }
  if (tokens.empty()) throw ParseError(path, 1, "empty file");
  if (tokens[0].text != "P2") throw ParseError(path, tokens[0].line, "unsupported magic '" + tokens[0].text + "'");

  std::size_t next = 1;
  auto integer = [&](const char* what) -> long long {
    if (next >= tokens.size()) throw ParseError(path, lineno == 0 ? 1 : lineno, std::string("missing ") + what);
    const Token& t = tokens[next++];
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size())
      throw ParseError(path, t.line, std::string("bad ") + what + " '" + t.text + "'");
    return v;
  };
  const long long width = integer("width");
  const long long height = integer("height");
  const long long maxval = integer("maxval");
  if (width < 1 || height < 1) throw ParseError(path, tokens[1].line, "non-positive image size");
  if (maxval < 1 || maxval > 65535) throw ParseError(path, tokens[3].line, "maxval out of range");
  Matrix m(height, width);
  for (Index i = 0; i < height; ++i) {
    for (Index j = 0; j < width; ++j) {
      const std::size_t at = next;
      const long long v = integer("pixel");
      if (v < 0 || v > maxval) throw ParseError(path, tokens[at].line, "pixel exceeds maxval");
      m(i, j) = static_cast<double>(v) / static_cast<double>(maxval);
    }
  }
  if (next != tokens.size()) throw ParseError(path, tokens[next].line, "trailing data after pixels");
  return m;
}

std::string field(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

}  // namespace

MatrixFormat parse_matrix_format(const std::string& s) {
  if (s == "csv") return MatrixFormat::Csv;
  if (s == "pgm") return MatrixFormat::Pgm;
  throw ConfigError("unknown matrix format '" + s + "'");
}

MatrixFormat format_from_path(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".pgm" ? MatrixFormat::Pgm : MatrixFormat::Csv;
}

Matrix load_matrix(const std::string& path, MatrixFormat format) {
  return format == MatrixFormat::Csv ? load_csv(path) : load_pgm(path);
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw NumericalError("cannot format number");
  return std::string(buf, ptr);
}

void save_matrix(const std::string& path, const Matrix& m, MatrixFormat format) {
  if (!all_finite(m)) throw NumericalError("refusing to save non-finite matrix to " + path);
  std::ofstream out = open_out(path);
  if (format == MatrixFormat::Csv) {
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) {
        if (j > 0) out << ',';
        out << format_number(m(i, j));
      }
      out << '\n';
    }
  } else {
    out << "P2\n" << m.cols() << ' ' << m.rows() << "\n255\n";
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) {
        if (j > 0) out << ' ';
        out << std::lround(std::clamp(m(i, j), 0.0, 1.0) * 255.0);
      }
      out << '\n';
    }
  }
  finish(out, path);
}

nlohmann::json to_json(const EvalResult& r) {
  nlohmann::json j;
  j["nmae"] = r.nmae ? nlohmann::json(*r.nmae) : nlohmann::json(nullptr);
  j["nmae_variant"] = r.nmae_variant;
  j["mse_observed"] = r.mse_observed;
  j["mse_unobserved"] = r.mse_unobserved ? nlohmann::json(*r.mse_unobserved) : nlohmann::json(nullptr);
  j["iterations"] = r.iterations;
  j["stop_reason"] = r.stop_reason;
  j["config"] = r.config;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
  finish(out, path);
}

void write_trajectory_csv(const std::string& path, const TrajectoryLog& log) {
  std::size_t k = 0;
  for (const auto& r : log.records) k = std::max(k, r.sigmas.size());
  std::ofstream out = open_out(path);
  out << "iter,loss,fidelity,reg_row,reg_col,mse_obs,mse_unobs";
  for (std::size_t i = 1; i <= k; ++i) out << ",sigma_" << i;
  out << '\n';
  for (const auto& r : log.records) {
    out << r.iter << ',' << format_number(r.loss) << ',' << format_number(r.fidelity) << ','
        << format_number(r.reg_row) << ',' << format_number(r.reg_col) << ',' << format_number(r.mse_obs) << ','
        << field(r.mse_unobs);
    for (std::size_t i = 0; i < k; ++i) {
      out << ',';
      if (i < r.sigmas.size()) out << format_number(r.sigmas[i]);
    }
    out << '\n';
  }
  finish(out, path);
}

void write_outputs(const EvalResult& result, const TrajectoryLog& log, const OutputPaths& paths) {
  if (!paths.json.empty()) write_text(paths.json, to_json(result).dump(2) + "\n");
  if (!paths.trajectory.empty()) write_trajectory_csv(paths.trajectory, log);
  if (!paths.snapshot_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(paths.snapshot_dir, ec);
    if (ec) throw IoError("cannot create directory " + paths.snapshot_dir + ": " + ec.message());
    const std::filesystem::path dir(paths.snapshot_dir);
    for (const auto& snap : log.snapshots) {
      const std::string suffix = std::to_string(snap.iter) + ".csv";
      if (snap.a_row) save_matrix((dir / ("A_row_" + suffix)).string(), *snap.a_row, MatrixFormat::Csv);
      if (snap.a_col) save_matrix((dir / ("A_col_" + suffix)).string(), *snap.a_col, MatrixFormat::Csv);
    }
  }
}

}  // namespace airmc
