#pragma once

// Randomized self-checks of the update path against the oracles, shared by
// the `verify` subcommand and the acceptance runner.

#include "semmap/distributions.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace semmap {

enum class VerifySuite { lemma5, lemma6, bmm, all };

/// Throws DomainError for names other than lemma5, lemma6, bmm, all.
[[nodiscard]] VerifySuite parse_verify_suite(std::string_view name);

struct CheckResult {
  std::string name;
  bool passed{false};
  std::string detail;
};

struct VerificationReport {
  std::vector<CheckResult> checks;
  [[nodiscard]] bool passed() const;
};

/// |a - b| / max(|a|, |b|), 0 when both are 0.
[[nodiscard]] double relative_difference(double a, double b);
[[nodiscard]] double max_relative_difference(const PosteriorMoments &a, const PosteriorMoments &b);
[[nodiscard]] double max_relative_difference(const MapParams &a, const MapParams &b);

/// Closed-form normaliser vs nested quadrature on `instances` random scalar
/// priors, plus the (0,1,1,1), y = 0 case against 1/4.
[[nodiscard]] CheckResult check_conjugate_normaliser(std::size_t instances, std::uint64_t seed);

/// Monte-Carlo E[w_j] vs a_j / a_0 within 5 sigma, K cycling through {2,3,5}.
[[nodiscard]] CheckResult check_dirichlet_tilt(std::size_t instances, std::size_t samples, std::uint64_t seed);

/// posterior_moments vs exact_moments after one update, (J,K) in {1..5}^2.
[[nodiscard]] CheckResult check_one_step_exact(std::size_t instances, std::uint64_t seed);

/// Both moment paths vs importance sampling within 5 sigma.
[[nodiscard]] CheckResult check_one_step_monte_carlo(std::size_t instances, std::size_t samples, std::uint64_t seed);

/// project(prior_moments(P)) == P for random P.
[[nodiscard]] CheckResult check_projection_roundtrip(std::size_t instances, std::uint64_t seed);

/// K = 1 moment-matching chains vs plain conjugate chains.
[[nodiscard]] CheckResult check_conjugate_degeneration(std::size_t chains, std::size_t length, std::uint64_t seed);

/// Runs the selected suite at its default sizes.
[[nodiscard]] VerificationReport run_verification(VerifySuite suite, std::uint64_t seed = 1);

} // namespace semmap
