#pragma once

#include "json.hpp"

#include "airmc/dense.hpp"
#include "airmc/theory.hpp"

namespace airmc {

// Row-major array of arrays.
nlohmann::json matrix_to_json(const Matrix& m);

nlohmann::json to_json(const Theorem1Report& r);
// Snapshots of A, the class structure and summary errors. The per-step series
// are sampled at the snapshot iterations to keep the document small.
nlohmann::json to_json(const Theorem2Report& r, const CorollaryCheck& c);

}  // namespace airmc
