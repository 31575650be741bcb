#include "semmap/bmm.hpp"

#include "semmap/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <utility>

namespace semmap {

namespace {

// r * moments(star) + (1 - r) * moments(prior), one pass per dimension.
NormalGammaMoments mixed_moments(const NormalGammaBlock &star, const NormalGammaBlock &prior, double r) {
  const Eigen::Index j = prior.mu().size();
  const double s = 1.0 - r;
  NormalGammaMoments out{Vector(j), Vector(j), Vector(j), Vector(j), Vector(j)};
  for (Eigen::Index n = 0; n < j; ++n) {
    const double m1 = star.mu()[n], t1 = star.alpha()[n] / star.beta()[n];
    const double m0 = prior.mu()[n], t0 = prior.alpha()[n] / prior.beta()[n];
    out.em[n] = r * m1 + s * m0;
    out.etau[n] = r * t1 + s * t0;
    out.etau2[n] = r * (t1 * t1 + t1 / star.beta()[n]) + s * (t0 * t0 + t0 / prior.beta()[n]);
    out.emtau[n] = r * m1 * t1 + s * m0 * t0;
    out.em2tau[n] = r * (1.0 / star.lambda()[n] + m1 * m1 * t1) + s * (1.0 / prior.lambda()[n] + m0 * m0 * t0);
  }
  return out;
}

double checked_denominator(double d, const char *what, std::size_t cls, Eigen::Index n) {
  if (!(d > kDegenerateDenominator))
    throw DegenerateMomentsError(
        fmt::format("project: {} of class {} dimension {} is {} (collapsed posterior)", what, cls, n, d));
  return d;
}

} // namespace

ResponsibilityVector responsibilities(const MixturePosteriorTerms &terms) {
  const auto k = static_cast<Eigen::Index>(terms.classes());
  ResponsibilityVector r(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double v = std::exp(terms.log_responsibility(static_cast<ClassIndex>(j)));
    r[j] = v < kResponsibilityFloor ? 0.0 : v;
  }
  return r / r.sum();
}

PosteriorMoments posterior_moments(const MapParams &p, const MixturePosteriorTerms &terms) {
  if (terms.classes() != p.classes())
    throw DimensionError(fmt::format("posterior_moments: {} terms for K={}", terms.classes(), p.classes()));
  const ResponsibilityVector r = responsibilities(terms);
  const Vector &a = p.dirichlet().concentration();
  const double a0 = p.dirichlet().total();

  // sum_j r_j moments(a + e_j), collapsed per class in O(K)
  PosteriorMoments out;
  out.ew = (a + r) / (a0 + 1.0);
  out.ew2 = (a + 1.0) * (a + 2.0 * r) / ((a0 + 1.0) * (a0 + 2.0));

  out.properties.reserve(p.classes());
  for (std::size_t i = 0; i < p.classes(); ++i) {
    const double ri = r[static_cast<Eigen::Index>(i)];
    if (ri == 0.0)
      out.properties.push_back(normal_gamma_moments(p.block(i)));
    else if (ri == 1.0)
      out.properties.push_back(normal_gamma_moments(terms.terms[i].block_star));
    else
      out.properties.push_back(mixed_moments(terms.terms[i].block_star, p.block(i), ri));
  }
  return out;
}

MapParams project(const PosteriorMoments &moments, MeanMatching matching) {
  const std::size_t k = moments.classes();
  if (k < 1 || static_cast<std::size_t>(moments.ew.size()) != k || static_cast<std::size_t>(moments.ew2.size()) != k)
    throw DimensionError("project: weight moments and property moments disagree on K");

  Vector a(static_cast<Eigen::Index>(k));
  if (k == 1) {
    a[0] = 1.0;
  } else {
    for (std::size_t i = 0; i < k; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double ew = moments.ew[ii];
      const double ew2 = moments.ew2[ii];
      const double var = ew2 - ew * ew;
      const double spread = ew - ew2;
      if (!(var > kDegenerateDenominator) || !(spread > 0.0))
        throw DegenerateMomentsError(
            fmt::format("project: weight moments of class {} are degenerate (E[w]={}, E[w^2]={})", i, ew, ew2));
      a[ii] = ew * spread / var;
    }
  }

  std::vector<NormalGammaBlock> blocks;
  blocks.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto &g = moments.properties[i];
    const Eigen::Index j = g.em.size();
    Vector mu(j), lambda(j), alpha(j), beta(j);
    for (Eigen::Index n = 0; n < j; ++n) {
      const double tau_var = checked_denominator(g.etau2[n] - g.etau[n] * g.etau[n], "Var[tau]", i, n);
      const double first = g.em2tau[n] - g.em[n] * g.em[n] * g.etau[n];
      double spread;
      if (matching == MeanMatching::first_moment && first > kDegenerateDenominator) {
        mu[n] = g.em[n];
        spread = first;
      } else {
        mu[n] = g.emtau[n] / g.etau[n];
        spread = g.em2tau[n] - g.emtau[n] * mu[n];
      }
      lambda[n] = 1.0 / checked_denominator(spread, "E[m^2 tau] - E[m tau]^2 / E[tau]", i, n);
      alpha[n] = g.etau[n] * g.etau[n] / tau_var;
      beta[n] = g.etau[n] / tau_var;
    }
    blocks.emplace_back(std::move(mu), std::move(lambda), std::move(alpha), std::move(beta));
  }
  return {DirichletParams(std::move(a)), std::move(blocks)};
}

MapParams bmm_property_update(const MapParams &p, const Vector &y, MeanMatching matching) {
  const auto terms = mixture_posterior_terms(p, y);
  MapParams projected = project(posterior_moments(p, terms), matching);
  if (p.classes() == 1)
    return {dirichlet_tilt(p.dirichlet(), 0).tilted, projected.blocks()};
  return projected;
}

} // namespace semmap
