#pragma once

// Closed-form posterior machinery: Dirichlet tilting, scalar
// Gaussian/normal-gamma conjugacy, the categorical update, and the exact
// K-term mixture posterior produced by one property measurement.

#include "semmap/distributions.hpp"
#include "semmap/special_math.hpp"

#include <vector>

namespace semmap {

/// w_j D(w | a) = u_j D(w | a + e_j)
struct TiltResult {
  double u{0.0};
  DirichletParams tilted;
};

[[nodiscard]] TiltResult dirichlet_tilt(const DirichletParams &d, ClassIndex j);

/// N(y; m, 1/tau) NG(m, tau | prior) = c* NG(m, tau | posterior)
struct ScalarConjugateResult {
  LogWeight log_c_star;
  ScalarNormalGamma posterior;
};

[[nodiscard]] ScalarConjugateResult ng_conjugate_update(const ScalarNormalGamma &prior, double y);

/// Per-dimension conjugate update of a whole block. `log_c_star` is the sum
/// of the per-dimension log normalisers, i.e. one -ln(2 pi)/2 per dimension.
struct BlockConjugateResult {
  LogWeight log_c_star;
  NormalGammaBlock posterior;
};

[[nodiscard]] BlockConjugateResult ng_conjugate_update(const NormalGammaBlock &prior, const Vector &y);

/// a_c += 1; blocks unchanged.
[[nodiscard]] MapParams categorical_update(const MapParams &p, ClassIndex c);

/// Term j of the exact posterior after a property measurement:
/// u_j D(w | a + e_j) c*_j NG(m_j, tau_j | starred) prod_{i != j} NG(m_i, tau_i | prior).
struct MixtureTerm {
  double u{0.0};
  LogWeight log_c_star;
  NormalGammaBlock block_star;
};

struct MixturePosteriorTerms {
  DirichletParams prior_dirichlet;
  std::vector<MixtureTerm> terms;
  LogWeight log_m; ///< ln M = ln sum_j u_j c*_j = ln p(y)

  [[nodiscard]] std::size_t classes() const noexcept { return terms.size(); }
  /// a + e_j
  [[nodiscard]] DirichletParams tilted_dirichlet(ClassIndex j) const;
  /// ln(u_j c*_j / M)
  [[nodiscard]] double log_responsibility(ClassIndex j) const;
};

/// Throws DimensionError when y.size() != J, DomainError on non-finite y, and
/// SuppressedMeasurementError if every term has zero weight.
[[nodiscard]] MixturePosteriorTerms mixture_posterior_terms(const MapParams &p, const Vector &y);

} // namespace semmap
