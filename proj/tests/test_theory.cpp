#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "airmc/errors.hpp"
#include "airmc/theory.hpp"

using namespace airmc;

TEST(FiniteDiff, ExactOnQuadratics) {
  Matrix a(2, 2);
  a << 1.0, 2.0, -3.0, 0.5;
  // f(X) = sum X^2 / 2 + <A, X>, gradient X + A.
  auto f = [&](const ParamPack& p) { return 0.5 * p[0].squaredNorm() + p[0].cwiseProduct(a).sum(); };
  const ParamPack x{Matrix::Constant(2, 2, 0.3)};
  const ParamPack g = finite_diff_grad(f, x, 1e-3);
  EXPECT_LT((g[0] - (x[0] + a)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FiniteDiff, NonFiniteProbeNamesEntry) {
  auto f = [](const ParamPack& p) { return p[1](0, 1) > 0.5 ? std::numeric_limits<double>::infinity() : 0.0; };
  ParamPack x{Matrix::Zero(1, 1), Matrix::Zero(1, 2)};
  x[1](0, 1) = 0.5;
  try {
    finite_diff_grad(f, x);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("block 1 entry (0,1)"), std::string::npos) << e.what();
  }
}

TEST(RelativeError, DefinitionAndFloor) {
  Matrix a = Matrix::Constant(1, 1, 1.1);
  Matrix n = Matrix::Constant(1, 1, 1.0);
  EXPECT_NEAR(relative_error(a, n), 0.1, 1e-15);
  EXPECT_NEAR(relative_error(Matrix::Constant(1, 1, 1e-9), Matrix::Zero(1, 1)), 0.1, 1e-15);
  EXPECT_THROW(relative_error(a, Matrix::Zero(2, 1)), ConfigError);
}

TEST(Balancedness, TransposePairIsExactlyBalanced) {
  Matrix w(3, 3);
  w << 1, 2, 3, 4, 5, 6, 7, 8, 10;
  FactorChain c{{w, Matrix(w.transpose())}};
  EXPECT_EQ(check_balancedness(c), 0.0);
  FactorChain one{{w}};
  EXPECT_THROW(check_balancedness(one), ConfigError);
}

TEST(Balancedness, GaussianDrawIsNotBalanced) {
  const FactorChain c = gaussian_init({5, 5, 3, 0, false, false}, 1.0, 2).chain;
  EXPECT_GT(check_balancedness(c), 1e-3);
}

TEST(FitSlope, RecoversLine) {
  const std::vector<double> x{0, 1, 2, 3};
  const std::vector<double> y{1, -1, -3, -5};
  EXPECT_NEAR(fit_slope(x, y), -2.0, 1e-15);
  const std::vector<double> one{1};
  EXPECT_THROW(fit_slope(one, one), ConfigError);
}

TEST(Theorem1, RateMatchesPredictionForBothVariants) {
  for (Index depth : {2, 3}) {
    for (auto v : {AdjacencyVariant::SymmetrizedSum, AdjacencyVariant::SymmetricExponent}) {
      Theorem1Config cfg;
      cfg.depth = depth;
      cfg.variant = v;
      cfg.iters = 201;
      const Theorem1Report r = verify_theorem1(cfg);
      EXPECT_EQ(r.checks, 40);
      EXPECT_EQ(r.records.size(), 120u);
      EXPECT_LE(r.median_rel_error, 5e-2);
      EXPECT_GE(r.min_gamma, -1e-12);
      for (const auto& rec : r.records) EXPECT_GE(rec.gamma, -1e-12);
    }
  }
}

TEST(Theorem1, WithoutRegularizationGammaVanishes) {
  Theorem1Config cfg;
  cfg.lambda_row = 0.0;
  cfg.lambda_col = 0.0;
  cfg.iters = 101;
  const Theorem1Report r = verify_theorem1(cfg);
  for (const auto& rec : r.records) EXPECT_EQ(rec.gamma, 0.0);
  EXPECT_LE(r.median_rel_error, 5e-2);
}

TEST(Theorem1, RejectsBadConfig) {
  Theorem1Config cfg;
  cfg.top_k = 7;
  EXPECT_THROW(verify_theorem1(cfg), ConfigError);
  cfg = Theorem1Config{};
  cfg.step = 0.0;
  EXPECT_THROW(verify_theorem1(cfg), ConfigError);
}

TEST(Theorem2Rows, ShapeNormsAndDuplicates) {
  const Matrix r = theorem2_rows(5, 3);
  ASSERT_EQ(r.rows(), 5);
  for (Index k = 0; k < 5; ++k) {
    EXPECT_NEAR(r.row(k).norm(), 1.0, 1e-15);
    EXPECT_GT(r.row(k).minCoeff(), 0.0);
  }
  EXPECT_EQ(r.row(0), r.row(1));
  EXPECT_EQ(r.row(1), r.row(2));
  EXPECT_GT((r.row(2) - r.row(3)).norm(), 0.1);
  EXPECT_GT((r.row(3) - r.row(4)).norm(), 0.1);
  // Distances between distinct rows are not all equal.
  const Matrix d = theorem2_rows(4, 0);
  EXPECT_GT(std::abs((d.row(0) - d.row(1)).norm() - (d.row(2) - d.row(3)).norm()), 1e-3);
  EXPECT_THROW(theorem2_rows(3, 4), ConfigError);
}

TEST(Theorem2, CanonicalInstanceReachesLimits) {
  const Theorem2Report r = verify_theorem2(theorem2_rows(4, 2), Theorem2Config{});
  EXPECT_EQ(r.s, 1);
  EXPECT_NEAR(r.gamma, 1.0 / 3.0, 1e-15);
  EXPECT_LE(r.final_error_s1, 1e-3);
  EXPECT_LE(r.final_error_s2, 1e-3);
  EXPECT_LE(r.final_error_diag, 1e-3);
  EXPECT_LE(r.max_symmetry_drift, 1e-12);
  EXPECT_GT(r.decay_rate, 0.0);
  EXPECT_FALSE(r.decay_flag);
  ASSERT_GE(r.half_gap_time_s2, 0.0);
  EXPECT_LE(r.half_gap_time_s2, r.half_gap_time_s1);
  const CorollaryCheck c = check_corollary1(r);
  EXPECT_TRUE(c.passed()) << c.detail;
  EXPECT_LT(c.tail_slope, 0.0);
}

TEST(Theorem2, LimitsAcrossInstances) {
  for (Index m : {2, 3, 5, 8}) {
    for (Index dup : {Index{0}, Index{2}, m}) {
      if (dup > m) continue;
      Theorem2Config cfg;
      cfg.epsilon = 0.3;
      const Theorem2Report r = verify_theorem2(theorem2_rows(m, dup), cfg);
      const Index s = dup >= 2 ? dup * (dup - 1) / 2 : 0;
      EXPECT_EQ(r.s, s);
      EXPECT_NEAR(r.gamma, 2.0 / static_cast<double>(m + 2 * s), 1e-15);
      EXPECT_LE(r.final_error_s1, 1e-3) << m << " " << dup;
      EXPECT_LE(r.final_error_s2, 1e-3) << m << " " << dup;
      EXPECT_LE(r.final_error_diag, 1e-3) << m << " " << dup;
      const CorollaryCheck c = check_corollary1(r);
      EXPECT_TRUE(c.passed()) << c.detail;
      for (std::size_t i = 1; i < r.reg_values.size(); ++i) ASSERT_LE(r.reg_values[i], r.reg_values[i - 1] + 1e-10);
    }
  }
}

TEST(Theorem2, IdenticalRowsKeepUniformAdjacency) {
  const Theorem2Report r = verify_theorem2(theorem2_rows(4, 4), Theorem2Config{});
  EXPECT_NEAR(r.gamma, 2.0 / 16.0, 1e-15);
  EXPECT_LE(r.final_error_s2, 1e-12);
  EXPECT_FALSE(r.decay_flag);
  EXPECT_TRUE(check_corollary1(r).passed());
}

TEST(Theorem2, SymmetricExponentStillRemovesDistinctPairs) {
  Theorem2Config cfg;
  cfg.variant = AdjacencyVariant::SymmetricExponent;
  const Theorem2Report r = verify_theorem2(theorem2_rows(4, 2), cfg);
  EXPECT_LE(r.final_error_s1, 1e-3);
  EXPECT_TRUE(check_corollary1(r).passed());
}

TEST(Theorem2, Preconditions) {
  Matrix rows = theorem2_rows(3, 0);
  rows(0, 0) *= 2.0;
  EXPECT_THROW(verify_theorem2(rows, Theorem2Config{}), ConfigError);
  Matrix neg(2, 2);
  neg << 1.0, 0.0, 0.0, 1.0;
  EXPECT_THROW(verify_theorem2(neg, Theorem2Config{}), ConfigError);
}

TEST(Gradcheck, SuiteCoversVariantsAndDepths) {
  const GradcheckSuite s = gradcheck_suite(7, 12);
  ASSERT_EQ(s.cases.size(), 12u);
  bool seen[2][3] = {};
  for (const auto& c : s.cases) {
    seen[c.variant == AdjacencyVariant::SymmetrizedSum ? 0 : 1][c.depth - 1] = true;
    EXPECT_EQ(c.block_errors.size(), static_cast<std::size_t>(c.depth + 2));
  }
  for (auto& v : seen)
    for (bool b : v) EXPECT_TRUE(b);
  EXPECT_LE(s.max_rel_error, 1e-5);
}
