#include "semmap/conjugate_update.hpp"

#include "semmap/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>

namespace semmap {

namespace {

const double half_log_two_pi = 0.5 * std::log(2.0 * std::numbers::pi);

void require_class(ClassIndex j, std::size_t k, const char *fn) {
  if (j >= k)
    throw IndexError(fmt::format("{}: class {} out of range (K={})", fn, j, k));
}

void require_measurement(const Vector &y, std::size_t dim, const char *fn) {
  if (static_cast<std::size_t>(y.size()) != dim)
    throw DimensionError(fmt::format("{}: measurement has {} entries, expected J={}", fn, y.size(), dim));
  if (!y.allFinite())
    throw DomainError(fmt::format("{}: non-finite measurement", fn));
}

// Block update that reports an overflowing beta* (y astronomically far from
// mu) as nullopt instead of throwing.
std::optional<BlockConjugateResult> try_block_update(const NormalGammaBlock &prior, const Vector &y) {
  const auto j = static_cast<Eigen::Index>(prior.dim());
  Vector mu(j), lambda(j), alpha(j), beta(j);
  double log_c = 0.0;
  for (Eigen::Index n = 0; n < j; ++n) {
    const auto r = ng_conjugate_update(prior.at(static_cast<std::size_t>(n)), y[n]);
    if (!std::isfinite(r.posterior.beta) || !std::isfinite(r.log_c_star.value))
      return std::nullopt;
    mu[n] = r.posterior.mu;
    lambda[n] = r.posterior.lambda;
    alpha[n] = r.posterior.alpha;
    beta[n] = r.posterior.beta;
    log_c += r.log_c_star.value;
  }
  return BlockConjugateResult{{log_c},
                              NormalGammaBlock(std::move(mu), std::move(lambda), std::move(alpha), std::move(beta))};
}

} // namespace

TiltResult dirichlet_tilt(const DirichletParams &d, ClassIndex j) {
  require_class(j, d.size(), "dirichlet_tilt");
  Vector a = d.concentration();
  const double u = a[static_cast<Eigen::Index>(j)] / d.total();
  a[static_cast<Eigen::Index>(j)] += 1.0;
  return {u, DirichletParams(std::move(a))};
}

ScalarConjugateResult ng_conjugate_update(const ScalarNormalGamma &prior, double y) {
  if (!std::isfinite(y))
    throw DomainError("ng_conjugate_update: non-finite measurement");
  const double lambda_star = prior.lambda + 1.0;
  const double mu_star = (prior.lambda * prior.mu + y) / lambda_star;
  const double alpha_star = prior.alpha + 0.5;
  const double resid = prior.mu - y;
  const double beta_star = prior.beta + prior.lambda * resid * resid / (2.0 * lambda_star);

  const double log_c = -half_log_two_pi + 0.5 * (std::log(prior.lambda) - std::log(lambda_star)) +
                       ln_gamma(alpha_star) - ln_gamma(prior.alpha) + prior.alpha * std::log(prior.beta) -
                       alpha_star * std::log(beta_star);
  return {{log_c}, {mu_star, lambda_star, alpha_star, beta_star}};
}

BlockConjugateResult ng_conjugate_update(const NormalGammaBlock &prior, const Vector &y) {
  require_measurement(y, prior.dim(), "ng_conjugate_update");
  auto r = try_block_update(prior, y);
  if (!r)
    throw SuppressedMeasurementError("ng_conjugate_update: squared residual overflows");
  return std::move(*r);
}

MapParams categorical_update(const MapParams &p, ClassIndex c) {
  require_class(c, p.classes(), "categorical_update");
  Vector a = p.dirichlet().concentration();
  a[static_cast<Eigen::Index>(c)] += 1.0;
  return {DirichletParams(std::move(a)), p.blocks()};
}

DirichletParams MixturePosteriorTerms::tilted_dirichlet(ClassIndex j) const {
  return dirichlet_tilt(prior_dirichlet, j).tilted;
}

double MixturePosteriorTerms::log_responsibility(ClassIndex j) const {
  const auto &t = terms.at(j);
  return std::log(t.u) + t.log_c_star.value - log_m.value;
}

MixturePosteriorTerms mixture_posterior_terms(const MapParams &p, const Vector &y) {
  require_measurement(y, p.dim(), "mixture_posterior_terms");
  const std::size_t k = p.classes();
  const DirichletParams &dir = p.dirichlet();

  std::vector<MixtureTerm> terms;
  terms.reserve(k);
  std::vector<double> log_weights(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double u = dir[j] / dir.total();
    if (auto r = try_block_update(p.block(j), y)) {
      log_weights[j] = std::log(u) + r->log_c_star.value;
      terms.push_back({u, r->log_c_star, std::move(r->posterior)});
    } else {
      // zero likelihood; the starred block is never weighted
      log_weights[j] = -std::numeric_limits<double>::infinity();
      terms.push_back({u, LogWeight::zero(), p.block(j)});
    }
  }
  const double log_m = log_sum_exp(log_weights);
  if (!std::isfinite(log_m))
    throw SuppressedMeasurementError("mixture_posterior_terms: every class assigns zero likelihood to y");
  return {dir, std::move(terms), {log_m}};
}

} // namespace semmap
