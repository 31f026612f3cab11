#include "airmc/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <vector>

#include "airmc/errors.hpp"
#include "airmc/io.hpp"

namespace airmc {
namespace {

double parse_double(const std::string& s, const char* what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError(std::string("bad ") + what + ": '" + s + "'");
  return v;
}

template <typename Int>
Int parse_int(const std::string& s, const char* what) {
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ConfigError(std::string("bad ") + what + ": '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

SamplingMask mask_from_file(const std::string& path, Index rows, Index cols) {
  const Matrix m = load_matrix(path, format_from_path(path));
  if (m.rows() != rows || m.cols() != cols)
    throw ConfigError("mask file " + path + " is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                      ", data is " + std::to_string(rows) + "x" + std::to_string(cols));
  if ((m.array() == 0.0).all()) throw ConfigError("mask file " + path + " marks every entry missing");
  return SamplingMask::from_indicator(m);
}

}  // namespace

MaskSpec parse_mask_spec(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("missing pattern needs a kind prefix: '" + text + "'");
  const std::string kind = text.substr(0, colon);
  const std::string rest = text.substr(colon + 1);
  if (kind == "random") {
    const auto parts = split(rest, ':');
    if (parts.size() > 2) throw ConfigError("expected random:<p>[:seed]");
    RandomMissing r;
    r.rate = parse_double(parts[0], "missing rate");
    if (parts.size() == 2) r.seed = parse_int<std::uint64_t>(parts[1], "mask seed");
    if (!(r.rate >= 0.0 && r.rate < 1.0)) throw ConfigError("missing rate must be in [0, 1)");
    return r;
  }
  if (kind == "patch") {
    const auto parts = split(rest, ',');
    if (parts.size() != 4) throw ConfigError("expected patch:<top,left,h,w>");
    return PatchMissing{parse_int<Index>(parts[0], "patch top"), parse_int<Index>(parts[1], "patch left"),
                        parse_int<Index>(parts[2], "patch height"), parse_int<Index>(parts[3], "patch width")};
  }
  if (kind == "texture") {
    if (rest.empty()) throw ConfigError("texture mask needs a path");
    return TextureMissing{rest};
  }
  throw ConfigError("unknown missing pattern '" + kind + "'");
}

SamplingMask gen_mask(const MaskSpec& spec, Index rows, Index cols) {
  if (rows < 1 || cols < 1) throw ConfigError("gen_mask: empty shape");
  if (const auto* r = std::get_if<RandomMissing>(&spec)) {
    if (!(r->rate >= 0.0 && r->rate < 1.0)) throw ConfigError("missing rate must be in [0, 1)");
    const Index total = rows * cols;
    // The small guard keeps products such as 0.7 * 4800 from rounding down.
    const auto missing = static_cast<Index>(std::floor(r->rate * static_cast<double>(total) + 1e-9));
    if (missing >= total) throw ConfigError("missing rate removes every entry");
    std::vector<Entry> all;
    all.reserve(static_cast<std::size_t>(total));
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) all.push_back({i, j});
    std::mt19937_64 rng(r->seed);
    std::shuffle(all.begin(), all.end(), rng);
    all.erase(all.begin(), all.begin() + missing);
    return SamplingMask(rows, cols, std::move(all));
  }
  if (const auto* p = std::get_if<PatchMissing>(&spec)) {
    if (p->top < 0 || p->left < 0 || p->height < 0 || p->width < 0 || p->top + p->height > rows ||
        p->left + p->width > cols)
      throw ConfigError("patch rectangle is not inside the matrix");
    if (p->height * p->width == rows * cols) throw ConfigError("patch removes every entry");
    std::vector<Entry> obs;
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) {
        const bool inside = i >= p->top && i < p->top + p->height && j >= p->left && j < p->left + p->width;
        if (!inside) obs.push_back({i, j});
      }
    }
    return SamplingMask(rows, cols, std::move(obs));
  }
  if (const auto* t = std::get_if<TextureMissing>(&spec)) return mask_from_file(t->path, rows, cols);
  return mask_from_file(std::get<FileMissing>(spec).path, rows, cols);
}

Matrix synth_lowrank(Index rows, Index cols, Index rank, std::uint64_t seed) {
  if (rows < 1 || cols < 1) throw ConfigError("synth_lowrank: empty shape");
  if (rank < 1 || rank > std::min(rows, cols)) throw ConfigError("synth_lowrank: rank must be in [1, min(rows, cols)]");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix left(rows, rank);
  Matrix right(rank, cols);
  for (Index i = 0; i < left.size(); ++i) left.data()[i] = normal(rng);
  for (Index i = 0; i < right.size(); ++i) right.data()[i] = normal(rng);
  Matrix out = left * right;
  const double scale = max_abs(out);
  if (scale > 0.0) out /= scale;
  return out;
}

Matrix synth_blocks(Index rows, Index cols, Index grid_rows, Index grid_cols, int levels, std::uint64_t seed) {
  if (grid_rows < 1 || grid_cols < 1 || rows % grid_rows != 0 || cols % grid_cols != 0)
    throw ConfigError("synth_blocks: block grid must divide the matrix shape");
  if (levels < 1) throw ConfigError("synth_blocks: levels must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, levels - 1);
  const Index bh = rows / grid_rows;
  const Index bw = cols / grid_cols;
  Matrix out(rows, cols);
  for (Index gi = 0; gi < grid_rows; ++gi) {
    for (Index gj = 0; gj < grid_cols; ++gj) {
      const int level = pick(rng);
      const double value = levels == 1 ? 0.5 : static_cast<double>(level) / static_cast<double>(levels - 1);
      out.block(gi * bh, gj * bw, bh, bw).setConstant(value);
    }
  }
  return out;
}

}  // namespace airmc
