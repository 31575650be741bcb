#include "semmap/bmm.hpp"
#include "semmap/conjugate_update.hpp"
#include "semmap/error.hpp"
#include "semmap/oracle.hpp"
#include "semmap/verification.hpp"

#include "test_util.hpp"

#include <numeric>

using namespace semmap;
using namespace semmap::testing;
using namespace semmap::oracle;

namespace {

double total_weight(const ExactMixturePosterior &post) {
  double s = 0.0;
  for (const auto &t : post.terms())
    s += t.log_weight.exp();
  return s;
}

ExactMixturePosterior run(const MapParams &p, const std::vector<Vector> &ys) {
  ExactMixturePosterior post(p);
  for (const auto &y : ys)
    post = exact_update(post, y);
  return post;
}

} // namespace

TEST(ExactPosterior, NoMeasurements) {
  const MapParams p(DirichletParams(vec({1, 2})), {ng(0, 1, 2, 2), ng(1, 2, 3, 4)});
  const ExactMixturePosterior post(p);
  ASSERT_EQ(post.terms().size(), 1u);
  EXPECT_EQ(post.terms()[0].log_weight.exp(), 1.0);
  EXPECT_LT(max_relative_difference(exact_moments(post), prior_moments(p)), 1e-15);
}

TEST(ExactPosterior, TermCountAndNormalisation) {
  const MapParams p(DirichletParams(vec({1, 2})), {ng(0, 1, 2, 2), ng(1, 2, 3, 4)});
  const auto post = run(p, {vec({0.1}), vec({0.9}), vec({-0.3})});
  EXPECT_EQ(post.terms().size(), 8u);
  EXPECT_NEAR(total_weight(post), 1.0, 1e-12);
  EXPECT_EQ(post.measurements(), 3u);
}

TEST(ExactPosterior, SingleClassEqualsConjugateChain) {
  const NormalGammaBlock b(vec({0.5, -1}), vec({2, 1}), vec({3, 2}), vec({1, 2}));
  const MapParams p(DirichletParams(vec({2.0})), {b});
  const std::vector<Vector> ys{vec({0.1, 0.2}), vec({1.0, -1.0}), vec({0.3, 0.3})};
  const auto post = run(p, ys);
  ASSERT_EQ(post.terms().size(), 1u);
  NormalGammaBlock chain = b;
  for (const auto &y : ys)
    chain = ng_conjugate_update(chain, y).posterior;
  EXPECT_LT(max_relative_difference(post.terms()[0].params, MapParams(DirichletParams(vec({5.0})), {chain})), 1e-12);
}

TEST(ExactPosterior, OneStepMatchesMomentPath) { EXPECT_TRUE(check_one_step_exact(100, 71).passed); }

TEST(ExactPosterior, OrderIndependence) {
  Rng rng = make_rng(72);
  for (int trial = 0; trial < 20; ++trial) {
    const MapParams p = random_map_params(2 + trial % 2, 1 + trial % 3, rng);
    std::vector<Vector> ys;
    for (int n = 0; n < 4; ++n)
      ys.push_back(random_measurement(p, rng));
    std::vector<Vector> rev(ys.rbegin(), ys.rend());
    const auto a = run(p, ys);
    const auto b = run(p, rev);
    EXPECT_LT(max_relative_difference(exact_moments(a), exact_moments(b)), 1e-10);
    EXPECT_NEAR(a.log_evidence(), b.log_evidence(), 1e-10 * std::abs(a.log_evidence()));
  }
}

TEST(ExactPosterior, EvidenceIsProductOfStepNormalisers) {
  Rng rng = make_rng(73);
  for (int trial = 0; trial < 20; ++trial) {
    const MapParams p = random_map_params(2 + trial % 3, 1 + trial % 2, rng);
    std::vector<Vector> ys;
    for (int n = 0; n < 3; ++n)
      ys.push_back(random_measurement(p, rng));
    const auto post = run(p, ys);
    const double enumerated = enumerated_log_evidence(p, ys);
    EXPECT_NEAR(post.log_evidence(), enumerated, 1e-10 * std::max(1.0, std::abs(enumerated)));
    // first step alone equals ln M of the closed-form terms
    const double log_m = mixture_posterior_terms(p, ys[0]).log_m.value;
    EXPECT_NEAR(run(p, {ys[0]}).log_evidence(), log_m, 1e-12 * std::max(1.0, std::abs(log_m)));
  }
}

TEST(ExactPosterior, TwoUpdatesDifferFromChainedProjection) {
  const MapParams p(DirichletParams(vec({1, 1})), {ng(-1, 1, 2, 2), ng(1, 1, 2, 2)});
  const std::vector<Vector> ys{vec({0.8}), vec({-0.6})};
  const PosteriorMoments exact = exact_moments(run(p, ys));
  MapParams chained = p;
  chained = bmm_property_update(chained, ys[0]);
  const PosteriorMoments approx = posterior_moments(chained, mixture_posterior_terms(chained, ys[1]));
  const double gap = max_relative_difference(approx, exact);
  RecordProperty("two_step_projection_gap", std::to_string(gap));
  EXPECT_GT(gap, 0.0);
}

TEST(ExactPosterior, TermGuard) {
  const MapParams p(DirichletParams::uniform(10), std::vector<NormalGammaBlock>(10, ng(0, 1, 2, 2)));
  ExactMixturePosterior post(p);
  for (int n = 0; n < 6; ++n)
    post = exact_update(post, vec({0.1 * n}));
  EXPECT_THROW((void)exact_update(post, vec({0.0})), OracleError);
}

TEST(MonteCarlo, NoMeasurementsGivePriorMoments) {
  Rng rng = make_rng(74);
  const MapParams p = random_map_params(3, 2, rng);
  const McMoments mc = mc_moments(p, {}, 200'000, rng);
  const PosteriorMoments exact = prior_moments(p);
  EXPECT_NEAR(mc.effective_sample_size, 200'000, 1e-6);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    EXPECT_LT(std::abs(mc.mean.ew[ii] - exact.ew[ii]), 5 * mc.std_error.ew[ii]);
    EXPECT_TRUE(((mc.mean.properties[i].em - exact.properties[i].em).abs() < 5 * mc.std_error.properties[i].em).all());
    EXPECT_TRUE(
        ((mc.mean.properties[i].etau - exact.properties[i].etau).abs() < 5 * mc.std_error.properties[i].etau).all());
  }
}

TEST(MonteCarlo, OneMeasurementMatchesExact) {
  Rng rng = make_rng(75);
  const MapParams p = random_map_params(2, 1, rng);
  const std::vector<Vector> ys{random_measurement(p, rng)};
  const McMoments mc = mc_moments(p, ys, 400'000, rng);
  const PosteriorMoments exact = exact_moments(run(p, ys));
  for (std::size_t i = 0; i < 2; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    EXPECT_LT(std::abs(mc.mean.ew2[ii] - exact.ew2[ii]), 5 * mc.std_error.ew2[ii]);
    EXPECT_LT(std::abs(mc.mean.properties[i].emtau[0] - exact.properties[i].emtau[0]),
              5 * mc.std_error.properties[i].emtau[0]);
    EXPECT_LT(std::abs(mc.mean.properties[i].em2tau[0] - exact.properties[i].em2tau[0]),
              5 * mc.std_error.properties[i].em2tau[0]);
  }
}

TEST(MonteCarlo, EffectiveSampleSizeShrinksWithSurprise) {
  const MapParams p(DirichletParams::uniform(1), {ng(0, 1, 3, 3)});
  double previous = std::numeric_limits<double>::infinity();
  for (double y : {0.0, 2.0, 4.0, 8.0}) {
    Rng rng = make_rng(76);
    const std::vector<Vector> ys{vec({y})};
    const double ess = mc_effective_sample_size(p, ys, 50'000, rng);
    EXPECT_LT(ess, previous) << "y=" << y;
    previous = ess;
  }
}

TEST(MonteCarlo, Guards) {
  Rng rng = make_rng(77);
  const MapParams p(DirichletParams::uniform(1), {ng(0, 1e4, 1000, 1)});
  EXPECT_THROW((void)mc_moments(p, {}, 100, rng), DomainError);
  const std::vector<Vector> far{vec({50.0})};
  EXPECT_THROW((void)mc_moments(p, far, 10'000, rng), OracleError);
  const std::vector<Vector> wrong{vec({0.0, 1.0})};
  EXPECT_THROW((void)mc_moments(p, wrong, 10'000, rng), DimensionError);
}

TEST(Quadrature, UnitPrior) {
  EXPECT_NEAR(normaliser_quadrature({0, 1, 1, 1}, 0.0), 0.25, 2.5e-5);
  EXPECT_LT(quadrature_check_normaliser({0, 1, 1, 1}, 0.0), 1e-4);
}

TEST(Quadrature, FarTail) {
  // predictive scale sqrt(beta (lambda + 1) / (alpha lambda)) = 1 for (0, 1, 2, 1)
  EXPECT_LT(quadrature_check_normaliser({0, 1, 2, 1}, 10.0), 1e-3);
  EXPECT_LT(quadrature_check_normaliser({1.5, 0.5, 6, 2}, 1.5 - 10.0 * std::sqrt(2.0 * 1.5 / 3.0)), 1e-3);
}

TEST(Quadrature, RandomPriors) { EXPECT_TRUE(check_conjugate_normaliser(25, 78).passed); }

TEST(DirichletMonteCarlo, TiltIdentity) {
  Rng rng = make_rng(79);
  const McEstimate e = mc_weight_mean(DirichletParams(vec({0.5, 1.5, 3.0})), 1, 200'000, rng);
  EXPECT_LT(std::abs(e.mean - 0.3) / 0.3, 1e-2);
  EXPECT_THROW((void)mc_weight_mean(DirichletParams(vec({1, 1})), 5, 100, rng), IndexError);
}

TEST(RandomInstances, RespectDocumentedRanges) {
  Rng rng = make_rng(80);
  for (int i = 0; i < 500; ++i) {
    const ScalarNormalGamma b = random_scalar_prior(rng);
    EXPECT_GE(b.mu, -2);
    EXPECT_LE(b.mu, 2);
    EXPECT_GE(b.lambda, 0.2);
    EXPECT_LE(b.alpha, 10);
    EXPECT_GE(b.alpha, 1.5);
    const DirichletParams d = random_dirichlet(4, rng);
    EXPECT_TRUE((d.concentration() >= 0.5).all() && (d.concentration() <= 5).all());
  }
}
