#pragma once

// Brute-force ground truth for verifying the moment-matching filter.
//
// Nothing here is meant for production-size problems: the exact posterior
// grows as K^N terms, the Monte-Carlo estimator needs >= 1e4 samples, and
// quadrature costs millions of integrand evaluations.

#include "semmap/distributions.hpp"
#include "semmap/random.hpp"
#include "semmap/special_math.hpp"

#include <span>
#include <vector>

namespace semmap::oracle {

inline constexpr std::size_t kMaxExactTerms = 1'000'000;

struct ExactTerm {
  LogWeight log_weight;
  MapParams params;
};

/// Exact posterior after N property measurements: a normalised mixture of
/// Dirichlet-normal-gamma terms.
class ExactMixturePosterior {
public:
  explicit ExactMixturePosterior(MapParams prior);

  [[nodiscard]] const std::vector<ExactTerm> &terms() const noexcept { return terms_; }
  [[nodiscard]] std::size_t measurements() const noexcept { return measurements_; }
  /// ln p(y_1, ..., y_N), the running product of per-step normalisers.
  [[nodiscard]] double log_evidence() const noexcept { return log_evidence_; }

private:
  ExactMixturePosterior() = default;
  friend ExactMixturePosterior exact_update(const ExactMixturePosterior &post, const Vector &y);

  std::vector<ExactTerm> terms_;
  std::size_t measurements_{0};
  double log_evidence_{0.0};
};

/// Splits every term into K children. Throws OracleError when the result
/// would exceed kMaxExactTerms.
[[nodiscard]] ExactMixturePosterior exact_update(const ExactMixturePosterior &post, const Vector &y);

/// Weight-averaged Dirichlet and normal-gamma moments over all terms.
[[nodiscard]] PosteriorMoments exact_moments(const ExactMixturePosterior &post);

/// ln p(y_1..y_N) by enumerating all K^N class assignments, each scored with
/// the Dirichlet-multinomial probability and batch normal-gamma marginals.
/// Shares no code with the sequential update path.
[[nodiscard]] double enumerated_log_evidence(const MapParams &prior, std::span<const Vector> ys);

struct McMoments {
  PosteriorMoments mean;
  PosteriorMoments std_error;
  double effective_sample_size{0.0};
};

inline constexpr std::size_t kMinMcSamples = 10'000;
inline constexpr double kMinEffectiveSampleSize = 100.0;

/// Self-normalised importance sampling: Theta drawn from the prior, weighted
/// by prod_n p(y_n | Theta). Throws DomainError for n_samples < 1e4 and
/// OracleError when the effective sample size drops below 100.
[[nodiscard]] McMoments mc_moments(const MapParams &p, std::span<const Vector> ys, std::size_t n_samples, Rng &rng);

/// Like mc_moments but returns the weights' effective sample size even when
/// it is below the diagnostic threshold.
[[nodiscard]] double mc_effective_sample_size(const MapParams &p, std::span<const Vector> ys, std::size_t n_samples,
                                              Rng &rng);

struct McEstimate {
  double mean{0.0};
  double std_error{0.0};
};

/// Plain Monte-Carlo estimate of E[w_j] under D(w | a); the tilt identity
/// w_j D(w|a) = u_j D(w|a + e_j) integrates to E[w_j] = u_j.
[[nodiscard]] McEstimate mc_weight_mean(const DirichletParams &a, ClassIndex j, std::size_t n_samples, Rng &rng);

/// Integral over (m, tau) of N(y; m, 1/tau) NG(m, tau | b) by nested adaptive
/// Simpson. Throws OracleError on non-convergence.
[[nodiscard]] double normaliser_quadrature(const ScalarNormalGamma &b, double y);

/// |quadrature - exp(log c*)| / exp(log c*).
[[nodiscard]] double quadrature_check_normaliser(const ScalarNormalGamma &b, double y);

/// Random test instances: a ~ U[0.5,5], mu ~ U[-2,2], lambda ~ U[0.2,5],
/// alpha ~ U[1.5,10], beta ~ U[0.2,5].
[[nodiscard]] ScalarNormalGamma random_scalar_prior(Rng &rng);
[[nodiscard]] DirichletParams random_dirichlet(std::size_t k, Rng &rng);
[[nodiscard]] MapParams random_map_params(std::size_t k, std::size_t j, Rng &rng);

/// y drawn from the prior predictive of p.
[[nodiscard]] Vector random_measurement(const MapParams &p, Rng &rng);

} // namespace semmap::oracle
