// Acceptance checks, one line per criterion:
//   acceptance [N ...]     runs the listed criteria (default: all nine)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "airmc/data.hpp"
#include "airmc/graph_reg.hpp"
#include "airmc/io.hpp"
#include "airmc/theory.hpp"
#include "cli.hpp"
#include "experiment.hpp"
#include "json.hpp"

using namespace airmc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string num(double v) {
  std::ostringstream ss;
  ss.precision(4);
  ss << v;
  return ss.str();
}

std::string read_file(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Matrix random_matrix(Index r, Index c, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

int quiet_cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run_cli(args, out, err);
  if (code != 0) std::cerr << out.str() << err.str();
  return code;
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  Timer t;
  const GradcheckSuite s = gradcheck_suite(2024, 20, 1e-5);
  const double secs = t.seconds();
  bool covered[2][3] = {};
  for (const auto& c : s.cases) covered[c.variant == AdjacencyVariant::SymmetrizedSum ? 0 : 1][c.depth - 1] = true;
  bool all_covered = true;
  for (auto& v : covered)
    for (bool b : v) all_covered = all_covered && b;
  const bool ok = s.cases.size() == 20 && all_covered && s.max_rel_error <= 1e-5 && secs <= 10.0;
  return {ok, "gradient oracle: 20 instances, max relative error " + num(s.max_rel_error) + " (tol 1e-05), " +
                  num(secs) + " s"};
}

Outcome criterion2() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<Index> dim(1, 10);
  double worst_gap = 0.0;
  double min_energy = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 100; ++t) {
    const Index m = dim(rng);
    const Index n = dim(rng);
    const auto variant = t % 2 == 0 ? AdjacencyVariant::SymmetrizedSum : AdjacencyVariant::SymmetricExponent;
    const Matrix w = random_matrix(m, m, rng, 1.5);
    const Matrix x = random_matrix(m, n, rng, 1.0);
    const LaplacianPair p = build_adjacency(w, variant);
    const double energy = dirichlet_energy(x, p.lap);
    double pair_sum = 0.0;
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < m; ++j) pair_sum += p.a(i, j) * (x.row(i) - x.row(j)).squaredNorm();
    worst_gap = std::max(worst_gap, std::abs(energy - 0.5 * pair_sum));
    min_energy = std::min(min_energy, energy);
  }
  const bool ok = worst_gap <= 1e-10 && min_energy >= -1e-12;
  return {ok, "Dirichlet identity: 100 instances, max |tr(X^T L X) - pair sum| " + num(worst_gap) +
                  ", min energy " + num(min_energy)};
}

Outcome criterion3() {
  Timer t;
  Theorem2Config cfg;
  cfg.epsilon = 0.0;
  const Theorem2Report r = verify_theorem2(theorem2_rows(4, 2), cfg);
  const CorollaryCheck c = check_corollary1(r);
  const double secs = t.seconds();
  const bool limits = r.final_error_s1 <= 1e-3 && r.final_error_s2 <= 1e-3 && r.final_error_diag <= 1e-3;
  const bool ok = std::abs(r.gamma - 1.0 / 3.0) < 1e-15 && limits && r.max_symmetry_drift <= 1e-12 &&
                  c.non_increasing && c.tail_decreasing && c.passed() && secs <= 30.0;
  return {ok, "regularizer flow limits (m=4, one duplicated pair): errors S1 " + num(r.final_error_s1) + ", S2 " +
                  num(r.final_error_s2) + ", diagonal " + num(r.final_error_diag) + "; symmetry drift " +
                  num(r.max_symmetry_drift) + "; log-tail slope " + num(c.tail_slope) + "; " + num(secs) + " s"};
}

Outcome criterion4() {
  Timer t;
  bool ok = true;
  std::string detail = "singular-value dynamics:";
  for (Index depth : {2, 3}) {
    for (auto v : {AdjacencyVariant::SymmetrizedSum, AdjacencyVariant::SymmetricExponent}) {
      Theorem1Config cfg;
      cfg.depth = depth;
      cfg.variant = v;
      const Theorem1Report r = verify_theorem1(cfg);
      const bool pass = r.checks == 200 && r.median_rel_error <= 5e-2 && r.min_gamma >= -1e-12;
      ok = ok && pass;
      detail += " L=" + std::to_string(depth) + "/" + to_string(v) + " median " + num(r.median_rel_error) +
                " (excluded " + std::to_string(r.excluded) + ", min gamma " + num(r.min_gamma) + ");";
    }
  }
  const double secs = t.seconds();
  ok = ok && secs <= 60.0;
  return {ok, detail + " " + num(secs) + " s"};
}

Outcome criterion5() {
  Timer t;
  const Matrix truth = synth_lowrank(100, 100, 5, 0);
  cli::CompletionSettings s;
  s.input = truth;
  s.truth = truth;
  s.mask = gen_mask(RandomMissing{0.8, 0}, 100, 100);
  s.depth = 3;
  s.reg = cli::parse_reg_spec("none");
  s.lr = 1e-3;
  s.max_iters = 100000;
  s.delta = 0.0;
  s.seed = 0;
  s.log_every = 1000;
  cli::resolve(s);
  const cli::CompletionOutcome res = cli::run_completion(s, nlohmann::json::object());
  const double secs = t.seconds();
  const double obs = res.eval.mse_observed;
  const double unobs = res.eval.mse_unobserved.value_or(std::numeric_limits<double>::infinity());
  // First logged iteration where the observed error meets the stopping level.
  std::int64_t first_hit = -1;
  for (const auto& rec : res.train.log.records) {
    if (rec.mse_obs <= 1e-3) {
      first_hit = rec.iter;
      break;
    }
  }
  const bool ok = obs <= 1e-3 && unobs <= 1e-2 && secs <= 300.0;
  return {ok, "rank-5 100x100, 80% missing, depth 3: observed MSE " + num(obs) + ", unobserved MSE " + num(unobs) +
                  " after " + std::to_string(res.train.iterations) + " iterations (observed MSE <= 1e-3 from iteration " +
                  std::to_string(first_hit) + "); " + num(secs) + " s"};
}

struct Criterion6Run {
  double nmae = 0.0;
  double final_unobs = 0.0;
  double min_unobs = 0.0;
  int code = -1;
};

std::vector<std::string> criterion6_args(const std::string& dir, const std::string& reg) {
  return {"complete",   "--input", dir + "/blocks.csv", "--missing", "random:0.7:0", "--truth", dir + "/blocks.csv",
          "--reg",      reg,       "--max-iters",       "10000",     "--delta",      "0",       "--seed",
          "0",          "--out",   dir + "/" + reg + ".json", "--trajectory", dir + "/" + reg + ".csv"};
}

Criterion6Run criterion6_run(const std::string& dir, const std::string& reg) {
  Criterion6Run r;
  r.code = quiet_cli(criterion6_args(dir, reg));
  if (r.code != 0) return r;
  r.nmae = nlohmann::json::parse(read_file(dir + "/" + reg + ".json")).at("nmae").get<double>();
  const Matrix traj = [&] {
    // Drop the header line; the remaining rows are numeric.
    std::istringstream in(read_file(dir + "/" + reg + ".csv"));
    std::string header;
    std::getline(in, header);
    const std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    write_text(dir + "/" + reg + "_body.csv", body);
    return load_matrix(dir + "/" + reg + "_body.csv", MatrixFormat::Csv);
  }();
  const auto col = traj.col(6);  // mse_unobs
  r.final_unobs = col(col.size() - 1);
  r.min_unobs = col.minCoeff();
  return r;
}

bool prepare_criterion6(const std::string& dir) {
  fs::create_directories(dir);
  return quiet_cli({"synth", "blocks", "--rows", "60", "--cols", "80", "--grid-rows", "4", "--grid-cols", "4",
                    "--levels", "5", "--seed", "0", "--output", dir + "/blocks.csv"}) == 0;
}

Outcome criterion6() {
  Timer t;
  const std::string dir = "acceptance_out/c6";
  if (!prepare_criterion6(dir)) return {false, "could not write the synthetic block matrix"};
  const Criterion6Run dmf = criterion6_run(dir, "none");
  const Criterion6Run air = criterion6_run(dir, "air");
  if (dmf.code != 0 || air.code != 0) return {false, "completion runs failed"};
  const double secs = t.seconds();
  const double air_ratio = air.final_unobs / air.min_unobs;
  const double dmf_ratio = dmf.final_unobs / dmf.min_unobs;
  const bool ok = air.nmae <= dmf.nmae && air_ratio <= 1.1 && secs <= 300.0;
  return {ok, "60x80 blocks, 70% missing, 10000 iterations: NMAE AIR " + num(air.nmae) + " vs DMF " + num(dmf.nmae) +
                  "; final/min unobserved MSE AIR " + num(air_ratio) + " (tol 1.1), DMF " + num(dmf_ratio) +
                  " (reported); " + num(secs) + " s"};
}

Outcome criterion7() {
  double worst_residual = 0.0;
  double worst_sigma = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed + 1000);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    std::vector<double> sv(6);
    for (auto& v : sv) v = u(rng);
    std::sort(sv.rbegin(), sv.rend());
    for (Index depth : {2, 3, 4}) {
      const FactorChain c = balanced_init(8, 6, depth, sv, seed);
      worst_residual = std::max(worst_residual, check_balancedness(c));
      const auto got = singular_values(forward_product(c));
      for (std::size_t i = 0; i < sv.size(); ++i) worst_sigma = std::max(worst_sigma, std::abs(got[i] - sv[i]));
    }
  }
  const bool ok = worst_residual <= 1e-10 && worst_sigma <= 1e-9;
  return {ok, "balanced initialization: 10 seeds x L in {2,3,4}, max residual " + num(worst_residual) +
                  ", max singular value error " + num(worst_sigma)};
}

Outcome criterion8() {
  Timer t;
  const std::string dir = "acceptance_out/c8";
  fs::create_directories(dir);
  std::ostringstream out;
  std::ostringstream err;
  // One repetition per configuration: three would not fit the time budget on a single core.
  const int code = cli::run_cli({"bench", "--sizes", "100,170,240", "--depths", "2,3,4", "--iters", "10000", "--reps",
                                 "1", "--csv", dir + "/bench.csv", "--out", dir + "/bench.json"},
                                out, err);
  const double secs = t.seconds();
  if (code != 0) return {false, "bench failed: " + err.str()};
  const auto j = nlohmann::json::parse(read_file(dir + "/bench.json"));
  const auto& table = j.at("table");
  bool finite = table.size() == 9;
  std::string ratios;
  for (const auto& row : table) {
    for (const char* k : {"t_dmf", "t_tv", "t_air"}) finite = finite && row.at(k).get<double>() > 0.0;
    ratios += " m=" + std::to_string(row.at("m").get<int>()) + ",L=" + std::to_string(row.at("L").get<int>()) + ":" +
              num(row.at("ratio_air").get<double>());
  }
  const auto& adv = j.at("advisories");
  std::string advice = adv.empty() ? "AIR/DMF ratio non-increasing in L (within 15%)"
                                   : std::to_string(adv.size()) + " advisory warning(s)";
  for (const auto& a : adv) std::cerr << "advisory: " << a.get<std::string>() << '\n';
  const bool ok = finite && secs <= 1800.0;
  return {ok, "complexity table written (" + advice + "); AIR/DMF" + ratios + "; " + num(secs) + " s"};
}

Outcome criterion9() {
  const std::string a = "acceptance_out/c9a";
  const std::string b = "acceptance_out/c9b";
  if (!prepare_criterion6(a) || !prepare_criterion6(b)) return {false, "could not write the synthetic block matrix"};
  bool same = true;
  std::string detail = "repeat of the block-matrix runs:";
  for (const std::string reg : {"none", "air"}) {
    auto args_a = criterion6_args(a, reg);
    auto args_b = criterion6_args(b, reg);
    if (quiet_cli(args_a) != 0 || quiet_cli(args_b) != 0) return {false, "completion runs failed"};
    // The config echo records the input path, so compare with the directory names aligned.
    std::string ja = read_file(a + "/" + reg + ".json");
    std::string jb = read_file(b + "/" + reg + ".json");
    for (std::size_t p; (p = jb.find(b)) != std::string::npos;) jb.replace(p, b.size(), a);
    const bool json_same = ja == jb;
    const bool csv_same = read_file(a + "/" + reg + ".csv") == read_file(b + "/" + reg + ".csv");
    same = same && json_same && csv_same;
    detail += " " + reg + " JSON " + (json_same ? "identical" : "DIFFERENT") + ", trajectory " +
              (csv_same ? "identical" : "DIFFERENT") + ";";
  }
  return {same, detail};
}

}  // namespace

int main(int argc, char** argv) {
  cli::tune_allocator();
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                       criterion6, criterion7, criterion8, criterion9};
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int n = std::atoi(argv[i]);
    if (n < 1 || n > 9) {
      std::cerr << "usage: acceptance [1-9 ...]\n";
      return 2;
    }
    selected.push_back(n);
  }
  if (selected.empty())
    for (int n = 1; n <= 9; ++n) selected.push_back(n);

  bool all = true;
  for (int n : selected) {
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(n - 1)]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
  }
  return all ? 0 : 1;
}
