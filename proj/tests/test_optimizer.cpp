#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "airmc/errors.hpp"
#include "airmc/optimizer.hpp"

using namespace airmc;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Scalar Adam written directly from the update equations.
struct ScalarAdam {
  double m = 0.0, v = 0.0;
  int t = 0;
  double step(double x, double g, const AdamOptions& o) {
    ++t;
    m = o.beta1 * m + (1 - o.beta1) * g;
    v = o.beta2 * v + (1 - o.beta2) * g * g;
    const double mh = m / (1 - std::pow(o.beta1, t));
    const double vh = v / (1 - std::pow(o.beta2, t));
    return x - o.lr * mh / (std::sqrt(vh) + o.eps);
  }
};

TrainConfig small_problem(bool air) {
  TrainConfig cfg;
  const Matrix truth = random_matrix(6, 1, 1) * random_matrix(1, 5, 2);
  std::vector<Entry> obs;
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 5; ++j)
      if ((i * 5 + j) % 3 != 0) obs.push_back({i, j});
  cfg.objective.mask = SamplingMask(6, 5, obs);
  cfg.objective.y = cfg.objective.mask.apply(truth);
  if (air) {
    cfg.objective.row_reg = AdaptiveRegularizer{Matrix::Zero(6, 6), AdjacencyVariant::SymmetrizedSum,
                                                Transformation::row(), 0.01};
    cfg.objective.col_reg = AdaptiveRegularizer{Matrix::Zero(5, 5), AdjacencyVariant::SymmetrizedSum,
                                                Transformation::column(), 0.01};
  }
  cfg.depth = 2;
  cfg.init.variance = 1e-2;
  cfg.init.seed = 3;
  cfg.optimizer.adam.lr = 1e-2;
  cfg.max_iters = 300;
  cfg.check_every = 10;
  cfg.log_every = 50;
  return cfg;
}

}  // namespace

TEST(Adam, FirstStepMovesByLearningRate) {
  Matrix p = Matrix::Zero(1, 3);
  Matrix g(1, 3);
  g << 2.0, -0.5, 0.0;
  AdamState st(AdamOptions{0.1, 0.9, 0.999, 1e-8});
  Matrix* params[] = {&p};
  const Matrix* grads[] = {&g};
  adam_step(st, params, grads);
  EXPECT_NEAR(p(0, 0), -0.1, 1e-8);
  EXPECT_NEAR(p(0, 1), 0.1, 1e-8);
  EXPECT_EQ(p(0, 2), 0.0);
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, MatchesScalarReferenceOverManySteps) {
  const AdamOptions o{3e-2, 0.8, 0.99, 1e-6};
  Matrix p = random_matrix(2, 2, 7);
  Matrix ref = p;
  std::vector<ScalarAdam> scalar(4);
  AdamState st(o);
  Matrix* params[] = {&p};
  for (int t = 0; t < 50; ++t) {
    const Matrix g = (p.array() * p.array() - 0.5).matrix();  // arbitrary smooth field
    const Matrix* grads[] = {&g};
    const Matrix gr = (ref.array() * ref.array() - 0.5).matrix();
    for (Index i = 0; i < 4; ++i) ref.data()[i] = scalar[static_cast<std::size_t>(i)].step(ref.data()[i], gr.data()[i], o);
    adam_step(st, params, grads);
  }
  EXPECT_LT((p - ref).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Adam, RejectsBadOptionsAndShapes) {
  EXPECT_THROW(AdamState(AdamOptions{0.0, 0.9, 0.999, 1e-8}), ConfigError);
  EXPECT_THROW(AdamState(AdamOptions{1e-3, 1.0, 0.999, 1e-8}), ConfigError);
  AdamState st;
  Matrix p = Matrix::Zero(2, 2);
  Matrix g = Matrix::Zero(2, 3);
  Matrix* params[] = {&p};
  const Matrix* grads[] = {&g};
  EXPECT_THROW(adam_step(st, params, grads), ConfigError);
}

TEST(GradientDescent, PlainUpdate) {
  Matrix p = Matrix::Ones(2, 2);
  const Matrix g = Matrix::Constant(2, 2, 4.0);
  Matrix* params[] = {&p};
  const Matrix* grads[] = {&g};
  gd_step(params, grads, 0.25);
  EXPECT_EQ(p, Matrix::Zero(2, 2));
  EXPECT_THROW(gd_step(params, grads, 0.0), ConfigError);
}

TEST(Train, RunsToMaxItersAndLogsOnStride) {
  TrainConfig cfg = small_problem(false);
  const TrainResult r = train(cfg);
  EXPECT_EQ(r.stop, StopReason::MaxIters);
  EXPECT_EQ(r.iterations, 300);
  ASSERT_EQ(r.log.records.size(), 7u);
  EXPECT_EQ(r.log.records.front().iter, 0);
  EXPECT_EQ(r.log.records.back().iter, 300);
  EXPECT_LT(r.log.records.back().loss, r.log.records.front().loss);
  EXPECT_LT((r.xhat - forward_product(r.chain)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Train, InfiniteDeltaStopsAtFirstCheck) {
  TrainConfig cfg = small_problem(true);
  cfg.delta = std::numeric_limits<double>::infinity();
  cfg.warmup_checks = 0;
  const TrainResult r = train(cfg);
  EXPECT_EQ(r.stop, StopReason::Threshold);
  EXPECT_EQ(r.iterations, cfg.check_every);
  EXPECT_EQ(r.log.records.back().iter, cfg.check_every);
}

TEST(Train, WarmupDelaysStoppingRule) {
  TrainConfig cfg = small_problem(true);
  cfg.delta = std::numeric_limits<double>::infinity();
  cfg.warmup_checks = 5;
  EXPECT_EQ(train(cfg).iterations, 5 * cfg.check_every);
}

TEST(Train, StoppingRuleNeedsBothRegularizers) {
  TrainConfig cfg = small_problem(true);
  cfg.objective.col_reg.reset();
  cfg.delta = std::numeric_limits<double>::infinity();
  cfg.warmup_checks = 0;
  EXPECT_EQ(train(cfg).stop, StopReason::MaxIters);
}

TEST(Train, DivergenceIsReported) {
  TrainConfig cfg = small_problem(false);
  cfg.optimizer.kind = OptimizerSpec::Kind::GradientDescent;
  cfg.optimizer.step = 1e6;
  cfg.init.variance = 1.0;
  const TrainResult r = train(cfg);
  EXPECT_EQ(r.stop, StopReason::Divergence);
  EXPECT_LT(r.iterations, cfg.max_iters);
}

TEST(Train, BitReproducible) {
  TrainConfig cfg = small_problem(true);
  const TrainResult a = train(cfg);
  const TrainResult b = train(cfg);
  EXPECT_EQ(a.xhat, b.xhat);
  EXPECT_EQ(a.row_reg->w, b.row_reg->w);
}

TEST(Train, TracksUnobservedErrorSigmasAndSnapshots) {
  TrainConfig cfg = small_problem(true);
  cfg.track_sigmas = 2;
  cfg.snapshot_at = {0, 100};
  const Matrix truth = Matrix::Zero(6, 5);
  const TrainResult r = train(cfg, truth);
  for (const auto& rec : r.log.records) {
    ASSERT_TRUE(rec.mse_unobs.has_value());
    EXPECT_EQ(rec.sigmas.size(), 2u);
  }
  ASSERT_EQ(r.log.snapshots.size(), 2u);
  EXPECT_EQ(r.log.snapshots[1].iter, 100);
  ASSERT_TRUE(r.log.snapshots[0].a_row.has_value());
  // W starts at its Gaussian draw, so A(0) is close to uniform.
  EXPECT_NEAR(r.log.snapshots[0].a_row->sum(), 2.0, 1e-12);
}

TEST(Train, ValidatesConfiguration) {
  TrainConfig cfg = small_problem(false);
  cfg.max_iters = 0;
  EXPECT_THROW(train(cfg), ConfigError);
  cfg = small_problem(false);
  cfg.delta = -1.0;
  EXPECT_THROW(train(cfg), ConfigError);
  cfg = small_problem(false);
  EXPECT_THROW(train(cfg, Matrix::Zero(2, 2)), ConfigError);
}

TEST(Train, BalancedInitWithGradientDescent) {
  TrainConfig cfg = small_problem(false);
  cfg.init.kind = InitSpec::Kind::Balanced;
  cfg.init.singular_values = {1.0, 0.5, 0.2, 0.1, 0.05};
  cfg.optimizer.kind = OptimizerSpec::Kind::GradientDescent;
  cfg.optimizer.step = 1e-2;
  const TrainResult r = train(cfg);
  EXPECT_EQ(r.stop, StopReason::MaxIters);
  EXPECT_LT(r.log.records.back().loss, r.log.records.front().loss);
}
