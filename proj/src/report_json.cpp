#include "airmc/report_json.hpp"

namespace airmc {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

nlohmann::json to_json(const Theorem1Report& r) {
  const auto& c = r.config;
  nlohmann::json j;
  j["config"] = {{"rows", c.rows},
                 {"cols", c.cols},
                 {"depth", c.depth},
                 {"lambda_row", c.lambda_row},
                 {"lambda_col", c.lambda_col},
                 {"variant", to_string(c.variant)},
                 {"step", c.step},
                 {"iters", c.iters},
                 {"check_stride", c.check_stride},
                 {"top_k", c.top_k},
                 {"observed_fraction", c.observed_fraction},
                 {"seed", c.seed}};
  j["median_rel_error"] = r.median_rel_error;
  j["max_rel_error"] = r.max_rel_error;
  j["min_gamma"] = r.min_gamma;
  j["checks"] = r.checks;
  j["excluded"] = r.excluded;
  j["final_balancedness"] = r.final_balancedness;
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& rec : r.records) {
    recs.push_back({{"iter", rec.iter},
                    {"k", rec.k + 1},
                    {"sigma", rec.sigma},
                    {"lhs", rec.lhs},
                    {"rhs", rec.rhs},
                    {"gamma", rec.gamma},
                    {"rel_error", rec.rel_error},
                    {"crossing", rec.crossing}});
  }
  j["records"] = std::move(recs);
  return j;
}

nlohmann::json to_json(const Theorem2Report& r, const CorollaryCheck& c) {
  const auto& cfg = r.config;
  nlohmann::json j;
  j["config"] = {{"variant", to_string(cfg.variant)},
                 {"epsilon", cfg.epsilon},
                 {"step", cfg.step},
                 {"iters", cfg.iters},
                 {"snapshot_every", cfg.snapshot_every}};
  j["rows"] = matrix_to_json(r.rows_matrix);
  j["m"] = r.m;
  j["s"] = r.s;
  j["gamma"] = r.gamma;
  j["pair_class"] = r.pair_class;
  j["target_a"] = matrix_to_json(r.target);
  j["a_initial"] = matrix_to_json(r.a_initial);
  j["a_final"] = matrix_to_json(r.a_final);
  // L = D - A at the end of the flow.
  Matrix lap = -r.a_final;
  lap.diagonal() = r.a_final.rowwise().sum() - r.a_final.diagonal();
  j["laplacian_final"] = matrix_to_json(lap);
  j["final_error_s1"] = r.final_error_s1;
  j["final_error_s2"] = r.final_error_s2;
  j["final_error_diag"] = r.final_error_diag;
  j["max_symmetry_drift"] = r.max_symmetry_drift;
  j["decay_rate"] = r.decay_rate;
  j["decay_flag"] = r.decay_flag;
  j["half_gap_time_s1"] = r.half_gap_time_s1;
  j["half_gap_time_s2"] = r.half_gap_time_s2;
  nlohmann::json snaps = nlohmann::json::array();
  for (std::size_t i = 0; i < r.snapshots.size(); ++i) {
    const auto it = static_cast<std::size_t>(r.snapshot_iters[i]);
    snaps.push_back({{"iter", r.snapshot_iters[i]},
                     {"t", r.times[it]},
                     {"reg_value", r.reg_values[it]},
                     {"max_error", r.max_error[it]},
                     {"a", matrix_to_json(r.snapshots[i])}});
  }
  j["snapshots"] = std::move(snaps);
  j["corollary"] = {{"non_negative", c.non_negative},
                    {"non_increasing", c.non_increasing},
                    {"bound_at_zero", c.bound_at_zero},
                    {"tail_decreasing", c.tail_decreasing},
                    {"tail_slope", c.tail_slope},
                    {"detail", c.detail},
                    {"passed", c.passed()}};
  return j;
}

}  // namespace airmc
