#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "airmc/dense.hpp"
#include "airmc/dmf_model.hpp"

namespace airmc {

// Missing patterns. Rates always mean the fraction of entries REMOVED.
struct RandomMissing {
  double rate = 0.0;  // in [0, 1)
  std::uint64_t seed = 0;
};

struct PatchMissing {
  Index top = 0;
  Index left = 0;
  Index height = 0;
  Index width = 0;
};

// 0/1 mask file (csv or pgm); entries equal to 0 are missing.
struct TextureMissing {
  std::string path;
};

struct FileMissing {
  std::string path;
};

using MaskSpec = std::variant<RandomMissing, PatchMissing, TextureMissing, FileMissing>;

// Parses "random:<p>[:seed]", "patch:<top,left,h,w>" or "texture:<path>".
MaskSpec parse_mask_spec(const std::string& text);

/// Returns the observed complement of the requested missing pattern.
/// Random masks remove exactly floor(p * rows * cols) entries, drawn without
/// replacement from a seeded shuffle.
SamplingMask gen_mask(const MaskSpec& spec, Index rows, Index cols);

/// Product of rows x rank and rank x cols standard normal factors, scaled to
/// unit max-absolute entry.
Matrix synth_lowrank(Index rows, Index cols, Index rank, std::uint64_t seed);

/// Piecewise-constant matrix over a grid_rows x grid_cols block grid; each
/// block takes one of `levels` equispaced values in [0, 1].
Matrix synth_blocks(Index rows, Index cols, Index grid_rows, Index grid_cols, int levels, std::uint64_t seed);

}  // namespace airmc
