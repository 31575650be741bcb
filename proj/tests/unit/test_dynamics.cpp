#include "semmap/dynamics.hpp"
#include "semmap/error.hpp"
#include "semmap/oracle.hpp"
#include "semmap/verification.hpp"

#include "test_util.hpp"

#include <cmath>

using namespace semmap;
using namespace semmap::testing;

namespace {

ForgettingConfig config(double delta, MapParams target) { return {TimeConstant(delta), std::move(target)}; }

MapParams some_map() {
  return {DirichletParams(vec({4, 1, 2})),
          {NormalGammaBlock(vec({0.2, 1}), vec({3, 2}), vec({10, 4}), vec({2, 1})),
           NormalGammaBlock(vec({-1, 0.5}), vec({1, 5}), vec({2, 8}), vec({3, 2})),
           NormalGammaBlock(vec({0.7, -0.3}), vec({2, 2}), vec({5, 5}), vec({1, 4}))}};
}

MapParams some_target() {
  return {DirichletParams(vec({1, 1, 1})),
          {NormalGammaBlock(vec({0.5, 0.5}), vec({0.1, 0.1}), vec({1, 1}), vec({0.5, 0.5})),
           NormalGammaBlock(vec({-0.5, 0.2}), vec({0.1, 0.1}), vec({1, 1}), vec({0.5, 0.5})),
           NormalGammaBlock(vec({1.5, -1}), vec({0.1, 0.1}), vec({1, 1}), vec({0.5, 0.5}))}};
}

} // namespace

TEST(TimeConstant, Validation) {
  EXPECT_THROW(TimeConstant(0.0), DomainError);
  EXPECT_THROW(TimeConstant(-1.0), DomainError);
  EXPECT_THROW(TimeConstant(NAN), DomainError);
  EXPECT_TRUE(TimeConstant(INFINITY).is_infinite());
  EXPECT_TRUE(TimeConstant::infinite().is_infinite());
  EXPECT_EQ(TimeConstant::infinite().decay(1e300), 1.0);
  EXPECT_EQ(TimeConstant(2.0).decay(0.0), 1.0);
  EXPECT_NEAR(TimeConstant(2.0).decay(2.0), std::exp(-1.0), 1e-16);
  EXPECT_THROW((void)TimeConstant(2.0).decay(-1.0), DomainError);
}

TEST(Predict, ZeroGapIsIdentity) {
  const MapParams p = some_map();
  EXPECT_EQ(flatten(predict(p, 0.0, config(3.0, some_target()))), flatten(p));
}

TEST(Predict, OneTimeConstant) {
  const MapParams p = some_map();
  const MapParams target = some_target();
  const MapParams q = predict(p, 5.0, config(5.0, target));
  const double c = std::exp(-1.0);
  EXPECT_NEAR(c, 0.3679, 1e-4);
  EXPECT_NEAR(q.dirichlet()[0], c * 4 + (1 - c) * 1, 1e-15);
  const auto fp = flatten(p), ft = flatten(target), fq = flatten(q);
  for (std::size_t i = 0; i < fp.size(); ++i)
    EXPECT_NEAR(fq[i], ft[i] + c * (fp[i] - ft[i]), 1e-15 * std::max(1.0, std::abs(fq[i])));
}

TEST(Predict, TargetIsFixedPoint) {
  const MapParams target = some_target();
  for (double h : {0.0, 0.1, 7.0, 1e6})
    EXPECT_EQ(flatten(predict(target, h, config(2.0, target))), flatten(target));
}

TEST(Predict, ContractionIsExactPerScalar) {
  Rng rng = make_rng(51);
  for (int trial = 0; trial < 100; ++trial) {
    const MapParams p = oracle::random_map_params(3, 2, rng);
    const MapParams t = oracle::random_map_params(3, 2, rng);
    const double h = std::uniform_real_distribution<double>(0.0, 20.0)(rng);
    const double c = std::exp(-h / 4.0);
    const auto fp = flatten(p), ft = flatten(t), fq = flatten(predict(p, h, config(4.0, t)));
    for (std::size_t i = 0; i < fp.size(); ++i)
      EXPECT_NEAR(std::abs(fq[i] - ft[i]), c * std::abs(fp[i] - ft[i]), 1e-13 * std::max(1.0, std::abs(fp[i])));
  }
}

TEST(Predict, Semigroup) {
  Rng rng = make_rng(52);
  for (int trial = 0; trial < 100; ++trial) {
    const MapParams p = oracle::random_map_params(2, 3, rng);
    const ForgettingConfig cfg = config(3.0, oracle::random_map_params(2, 3, rng));
    const double h1 = std::uniform_real_distribution<double>(0.0, 10.0)(rng);
    const double h2 = std::uniform_real_distribution<double>(0.0, 10.0)(rng);
    const MapParams twice = predict(predict(p, h1, cfg), h2, cfg);
    const MapParams once = predict(p, h1 + h2, cfg);
    EXPECT_LT(max_relative_difference(twice, once), 1e-12);
  }
}

TEST(Predict, LongGapsReachTarget) {
  const MapParams target = some_target();
  for (double gaps : {50.0, 100.0}) {
    const MapParams q = predict(some_map(), gaps * 2.0, config(2.0, target));
    const double bound = gaps == 100.0 ? 1e-40 : 1e-20;
    const auto fq = flatten(q), ft = flatten(target);
    for (std::size_t i = 0; i < fq.size(); ++i)
      EXPECT_LE(std::abs(fq[i] - ft[i]), bound * std::abs(ft[i])) << i;
  }
}

TEST(Predict, RejectsBadInputs) {
  EXPECT_THROW((void)predict(some_map(), -1.0, config(2.0, some_target())), DomainError);
  const MapParams wrong(DirichletParams::uniform(2), {ng(0, 1, 1, 1), ng(0, 1, 1, 1)});
  EXPECT_THROW((void)predict(some_map(), 1.0, config(2.0, wrong)), DimensionError);
}

TEST(Step, InfiniteDeltaEqualsStaticUpdate) {
  const MapParams p = some_map();
  const ForgettingConfig cfg{TimeConstant::infinite(), some_target()};
  FilterState s{p, std::nullopt};
  MapParams plain = p;
  Rng rng = make_rng(53);
  for (int k = 0; k < 50; ++k) {
    const Vector y = oracle::random_measurement(p, rng);
    s = step(s, {0.37 * k, std::nullopt, y}, cfg);
    plain = bmm_property_update(plain, y);
  }
  EXPECT_EQ(flatten(s.params), flatten(plain));
}

TEST(Step, CategoricalOnlyPayload) {
  const MapParams p = some_map();
  const ForgettingConfig cfg = config(10.0, some_target());
  const FilterState s0{p, 0.0};
  const FilterState s1 = step(s0, {4.0, ClassIndex{2}, std::nullopt}, cfg);
  const MapParams predicted = predict(p, 4.0, cfg);
  EXPECT_EQ(flatten(MapParams(predicted.dirichlet(), s1.params.blocks())), flatten(predicted));
  EXPECT_DOUBLE_EQ(s1.params.dirichlet()[2], predicted.dirichlet()[2] + 1.0);
  EXPECT_DOUBLE_EQ(s1.params.dirichlet()[0], predicted.dirichlet()[0]);
  EXPECT_EQ(s1.last_time, 4.0);
}

TEST(Step, BothPayloadsPredictOnceThenPropertyThenLabel) {
  const MapParams p = some_map();
  const ForgettingConfig cfg = config(10.0, some_target());
  const Vector y = vec({0.1, 0.4});
  const FilterState s = step({p, 1.0}, {3.0, ClassIndex{1}, y}, cfg);
  const MapParams expected = categorical_update(bmm_property_update(predict(p, 2.0, cfg), y), 1);
  EXPECT_EQ(flatten(s.params), flatten(expected));
}

TEST(Step, FirstMeasurementDoesNotForget) {
  const MapParams p = some_map();
  const FilterState s = step({p, std::nullopt}, {1e6, ClassIndex{0}, std::nullopt}, config(1.0, some_target()));
  EXPECT_EQ(flatten(s.params), flatten(categorical_update(p, 0)));
}

TEST(Step, MeanMatchingIsForwarded) {
  const MapParams p = some_map();
  const ForgettingConfig cfg = config(10.0, some_target());
  const Vector y = vec({0.1, 0.4});
  const FilterState a = step({p, 0.0}, {1.0, std::nullopt, y}, cfg, MeanMatching::first_moment);
  EXPECT_EQ(flatten(a.params), flatten(bmm_property_update(predict(p, 1.0, cfg), y, MeanMatching::first_moment)));
}

TEST(Step, RejectsEmptyAndBackwardMeasurements) {
  const ForgettingConfig cfg = config(10.0, some_target());
  EXPECT_THROW((void)step({some_map(), 0.0}, {1.0, std::nullopt, std::nullopt}, cfg), DomainError);
  EXPECT_THROW((void)step({some_map(), 5.0}, {4.0, ClassIndex{0}, std::nullopt}, cfg), TimeRegressionError);
  EXPECT_THROW((void)step({some_map(), 5.0}, {NAN, ClassIndex{0}, std::nullopt}, cfg), DomainError);
}

TEST(Step, TimestampRescalingWithInfiniteDelta) {
  Rng rng = make_rng(54);
  const MapParams p = some_map();
  const ForgettingConfig cfg{TimeConstant::infinite(), some_target()};
  FilterState a{p, std::nullopt}, b{p, std::nullopt};
  double t = 0.0;
  for (int k = 0; k < 200; ++k) {
    t += std::uniform_real_distribution<double>(0.0, 3.0)(rng);
    const Vector y = oracle::random_measurement(p, rng);
    const std::optional<ClassIndex> label = k % 3 == 0 ? std::optional<ClassIndex>(k % 3) : std::nullopt;
    a = step(a, {t, label, y}, cfg);
    b = step(b, {1e4 * t * t, label, y}, cfg);
  }
  EXPECT_EQ(flatten(a.params), flatten(b.params));
}

TEST(Step, ClosureOverLongMixedSequences) {
  Rng rng = make_rng(55);
  const MapParams target = some_target();
  const ForgettingConfig cfg = config(0.5, target);
  FilterState s{some_map(), std::nullopt};
  double t = 0.0;
  for (int k = 0; k < 2000; ++k) {
    t += std::exponential_distribution<double>(2.0)(rng);
    TimedMeasurement m{t, std::nullopt, std::nullopt};
    if (k % 2 == 0)
      m.property = oracle::random_measurement(target, rng);
    if (k % 3 == 0)
      m.label = static_cast<ClassIndex>(k % 3);
    if (!m.label && !m.property)
      m.label = 1;
    s = step(s, m, cfg);
    ASSERT_TRUE(in_parameter_space(s.params)) << k;
  }
}
