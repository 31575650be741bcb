#pragma once

// Bayesian moment matching of the exact mixture posterior back onto the
// Dirichlet-normal-gamma family.

#include "semmap/conjugate_update.hpp"
#include "semmap/distributions.hpp"

namespace semmap {

/// r_j = u_j c*_j / M, with entries below `kResponsibilityFloor` set to 0.
using ResponsibilityVector = Vector;

inline constexpr double kResponsibilityFloor = 1e-15;

/// Denominators at or below this are treated as collapsed moments.
inline constexpr double kDegenerateDenominator = 1e-300;

[[nodiscard]] ResponsibilityVector responsibilities(const MixturePosteriorTerms &terms);

/// Sufficient moments of the exact posterior described by `terms`.
/// Per class: E[g_i] = r_i E*[g_i] + (1 - r_i) E[g_i] for property moments;
/// weight moments mix the K tilted Dirichlets, sum_j r_j moments(a + e_j).
[[nodiscard]] PosteriorMoments posterior_moments(const MapParams &p, const MixturePosteriorTerms &terms);

/// How (mu, lambda) of each normal-gamma dimension are read off the moments.
/// The moment set {E[m], E[m tau], E[m^2 tau]} over-determines the pair.
enum class MeanMatching {
  /// mu = E[m tau] / E[tau], lambda = 1 / (E[m^2 tau] - E[m tau]^2 / E[tau]).
  /// Always solvable for a non-degenerate posterior, and lambda never exceeds
  /// the largest lambda among the mixed components.
  precision_weighted,
  /// mu = E[m], lambda = 1 / (E[m^2 tau] - E[m]^2 E[tau]). A mixture whose
  /// components disagree in both m and tau can push the denominator to or
  /// below zero; such dimensions fall back to precision_weighted.
  first_moment,
};

/// Inverts the sufficient moments into parameters; alpha and beta come from
/// E[tau] and E[tau^2], a_i from E[w_i] and E[w_i^2]. Throws
/// DegenerateMomentsError if Var[tau], the weight variance or the chosen
/// lambda denominator collapses.
///
/// For K = 1 the weight is identically 1 and its concentration is not
/// identified by moments; the returned Dirichlet is a = (1).
[[nodiscard]] MapParams project(const PosteriorMoments &moments,
                                MeanMatching matching = MeanMatching::precision_weighted);

/// One property-measurement step: exact terms, posterior moments, projection.
/// For K = 1 the concentration is carried over as the exact tilt a + 1.
[[nodiscard]] MapParams bmm_property_update(const MapParams &p, const Vector &y,
                                            MeanMatching matching = MeanMatching::precision_weighted);

} // namespace semmap
