#include "semmap/verification.hpp"

#include "semmap/bmm.hpp"
#include "semmap/conjugate_update.hpp"
#include "semmap/error.hpp"
#include "semmap/oracle.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace semmap {

namespace {

std::size_t uniform_index(Rng &rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

double max_rel(const Vector &a, const Vector &b) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    m = std::max(m, relative_difference(a[i], b[i]));
  return m;
}

// Calls f(value, reference, std_error) for every scalar moment.
void for_each_moment(const PosteriorMoments &x, const PosteriorMoments &ref, const PosteriorMoments &se,
                     const std::function<void(double, double, double)> &f) {
  for (Eigen::Index i = 0; i < x.ew.size(); ++i) {
    f(x.ew[i], ref.ew[i], se.ew[i]);
    f(x.ew2[i], ref.ew2[i], se.ew2[i]);
  }
  for (std::size_t c = 0; c < x.classes(); ++c) {
    const auto &a = x.properties[c];
    const auto &b = ref.properties[c];
    const auto &s = se.properties[c];
    for (Eigen::Index d = 0; d < a.em.size(); ++d) {
      f(a.em[d], b.em[d], s.em[d]);
      f(a.etau[d], b.etau[d], s.etau[d]);
      f(a.etau2[d], b.etau2[d], s.etau2[d]);
      f(a.emtau[d], b.emtau[d], s.emtau[d]);
      f(a.em2tau[d], b.em2tau[d], s.em2tau[d]);
    }
  }
}

} // namespace

VerifySuite parse_verify_suite(std::string_view name) {
  if (name == "lemma5")
    return VerifySuite::lemma5;
  if (name == "lemma6")
    return VerifySuite::lemma6;
  if (name == "bmm")
    return VerifySuite::bmm;
  if (name == "all")
    return VerifySuite::all;
  throw DomainError(fmt::format("unknown verification suite '{}'", name));
}

bool VerificationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult &c) { return c.passed; });
}

double relative_difference(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale == 0.0)
    return 0.0;
  return std::abs(a - b) / scale;
}

double max_relative_difference(const PosteriorMoments &a, const PosteriorMoments &b) {
  if (a.classes() != b.classes())
    throw DimensionError("max_relative_difference: class counts differ");
  double m = 0.0;
  for_each_moment(a, b, a, [&m](double x, double y, double) { m = std::max(m, relative_difference(x, y)); });
  return m;
}

double max_relative_difference(const MapParams &a, const MapParams &b) {
  if (a.classes() != b.classes() || a.dim() != b.dim())
    throw DimensionError("max_relative_difference: (K, J) differ");
  double m = max_rel(a.dirichlet().concentration(), b.dirichlet().concentration());
  for (std::size_t i = 0; i < a.classes(); ++i) {
    const auto &x = a.block(i);
    const auto &y = b.block(i);
    m = std::max({m, max_rel(x.mu(), y.mu()), max_rel(x.lambda(), y.lambda()), max_rel(x.alpha(), y.alpha()),
                  max_rel(x.beta(), y.beta())});
  }
  return m;
}

CheckResult check_conjugate_normaliser(std::size_t instances, std::uint64_t seed) {
  CheckResult out{"conjugate normaliser vs quadrature", true, {}};
  const double analytic = ng_conjugate_update(ScalarNormalGamma{0.0, 1.0, 1.0, 1.0}, 0.0).log_c_star.exp();
  const double analytic_err = std::abs(analytic - 0.25);
  Rng rng = make_rng(seed, 6);
  double worst = 0.0;
  for (std::size_t n = 0; n < instances; ++n) {
    const ScalarNormalGamma b = oracle::random_scalar_prior(rng);
    MapParams p(DirichletParams::uniform(1), {NormalGammaBlock::constant(1, b)});
    const double y = oracle::random_measurement(p, rng)[0];
    worst = std::max(worst, oracle::quadrature_check_normaliser(b, y));
  }
  out.passed = worst < 1e-4 && analytic_err <= 1e-10;
  out.detail = fmt::format("{} instances, max rel err {:.3g}; c*(0,1,1,1; y=0) = {:.17g}", instances, worst, analytic);
  return out;
}

CheckResult check_dirichlet_tilt(std::size_t instances, std::size_t samples, std::uint64_t seed) {
  CheckResult out{"Dirichlet tilt mean", true, {}};
  constexpr std::size_t ks[] = {2, 3, 5};
  Rng rng = make_rng(seed, 5);
  double worst = 0.0;
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t k = ks[n % 3];
    const DirichletParams a = oracle::random_dirichlet(k, rng);
    const ClassIndex j = uniform_index(rng, 0, k - 1);
    const double u = dirichlet_tilt(a, j).u;
    const oracle::McEstimate est = oracle::mc_weight_mean(a, j, samples, rng);
    const double z = std::abs(est.mean - u) / est.std_error;
    worst = std::max(worst, z);
  }
  out.passed = worst <= 5.0;
  out.detail = fmt::format("{} instances x {} samples, max |z| {:.3f}", instances, samples, worst);
  return out;
}

CheckResult check_one_step_exact(std::size_t instances, std::uint64_t seed) {
  CheckResult out{"one-step moments vs exact mixture", true, {}};
  Rng rng = make_rng(seed, 3);
  double worst = 0.0;
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t j = uniform_index(rng, 1, 5);
    const std::size_t k = uniform_index(rng, 1, 5);
    const MapParams p = oracle::random_map_params(k, j, rng);
    const Vector y = oracle::random_measurement(p, rng);
    const PosteriorMoments fast = posterior_moments(p, mixture_posterior_terms(p, y));
    const PosteriorMoments exact = oracle::exact_moments(oracle::exact_update(oracle::ExactMixturePosterior(p), y));
    worst = std::max(worst, max_relative_difference(fast, exact));
  }
  out.passed = worst <= 1e-10;
  out.detail = fmt::format("{} instances, max rel diff {:.3g}", instances, worst);
  return out;
}

CheckResult check_one_step_monte_carlo(std::size_t instances, std::size_t samples, std::uint64_t seed) {
  CheckResult out{"one-step moments vs importance sampling", true, {}};
  Rng rng = make_rng(seed, 4);
  double worst = 0.0;
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t j = uniform_index(rng, 1, 5);
    const std::size_t k = uniform_index(rng, 1, 5);
    const MapParams p = oracle::random_map_params(k, j, rng);
    const Vector y = oracle::random_measurement(p, rng);
    const PosteriorMoments fast = posterior_moments(p, mixture_posterior_terms(p, y));
    const PosteriorMoments exact = oracle::exact_moments(oracle::exact_update(oracle::ExactMixturePosterior(p), y));
    const std::vector<Vector> ys{y};
    const oracle::McMoments mc = oracle::mc_moments(p, ys, samples, rng);
    auto score = [&worst](double x, double ref, double se) {
      const double diff = std::abs(x - ref);
      if (se > 0.0)
        worst = std::max(worst, diff / se);
      else if (diff > 1e-12 * std::max(1.0, std::abs(ref)))
        worst = std::numeric_limits<double>::infinity();
    };
    for_each_moment(fast, mc.mean, mc.std_error, score);
    for_each_moment(exact, mc.mean, mc.std_error, score);
  }
  out.passed = worst <= 5.0;
  out.detail = fmt::format("{} instances x {} samples, max |z| {:.3f}", instances, samples, worst);
  return out;
}

CheckResult check_projection_roundtrip(std::size_t instances, std::uint64_t seed) {
  CheckResult out{"projection roundtrip", true, {}};
  Rng rng = make_rng(seed, 7);
  double worst = 0.0;
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t j = uniform_index(rng, 1, 5);
    const std::size_t k = uniform_index(rng, 2, 5);
    const MapParams p = oracle::random_map_params(k, j, rng);
    worst = std::max(worst, max_relative_difference(project(prior_moments(p)), p));
  }
  out.passed = worst <= 1e-9;
  out.detail = fmt::format("{} parameter sets, max rel diff {:.3g}", instances, worst);
  return out;
}

CheckResult check_conjugate_degeneration(std::size_t chains, std::size_t length, std::uint64_t seed) {
  CheckResult out{"K=1 chains vs conjugate chains", true, {}};
  Rng rng = make_rng(seed, 8);
  double worst = 0.0;
  for (std::size_t n = 0; n < chains; ++n) {
    const std::size_t j = uniform_index(rng, 1, 5);
    MapParams bmm = oracle::random_map_params(1, j, rng);
    const MapParams source = oracle::random_map_params(1, j, rng);
    NormalGammaBlock block = bmm.block(0);
    double a = bmm.dirichlet()[0];
    for (std::size_t s = 0; s < length; ++s) {
      const Vector y = oracle::random_measurement(source, rng);
      bmm = bmm_property_update(bmm, y);
      block = ng_conjugate_update(block, y).posterior;
      a += 1.0;
      const MapParams conj(DirichletParams(Vector::Constant(1, a)), {block});
      worst = std::max(worst, max_relative_difference(bmm, conj));
    }
  }
  out.passed = worst <= 1e-10;
  out.detail = fmt::format("{} chains x {} steps, max rel diff {:.3g}", chains, length, worst);
  return out;
}

VerificationReport run_verification(VerifySuite suite, std::uint64_t seed) {
  VerificationReport r;
  const bool all = suite == VerifySuite::all;
  if (all || suite == VerifySuite::lemma5)
    r.checks.push_back(check_dirichlet_tilt(50, 100'000, seed));
  if (all || suite == VerifySuite::lemma6)
    r.checks.push_back(check_conjugate_normaliser(100, seed));
  if (all || suite == VerifySuite::bmm) {
    r.checks.push_back(check_one_step_exact(100, seed));
    r.checks.push_back(check_one_step_monte_carlo(10, 1'000'000, seed));
    r.checks.push_back(check_projection_roundtrip(1000, seed));
    r.checks.push_back(check_conjugate_degeneration(10, 100, seed));
  }
  return r;
}

} // namespace semmap
