#pragma once

#include <compare>
#include <cmath>
#include <limits>
#include <span>

namespace semmap {

/// Natural logarithm of a positive quantity. Ordering agrees with the
/// ordering of the underlying quantities; -inf represents zero.
struct LogWeight {
  double value{-std::numeric_limits<double>::infinity()};

  [[nodiscard]] static constexpr LogWeight zero() noexcept { return {}; }
  [[nodiscard]] static constexpr LogWeight one() noexcept { return {0.0}; }
  [[nodiscard]] static LogWeight of(double positive) { return {std::log(positive)}; }

  [[nodiscard]] double exp() const noexcept { return std::exp(value); }
  [[nodiscard]] bool is_zero() const noexcept { return value == -std::numeric_limits<double>::infinity(); }

  friend constexpr auto operator<=>(const LogWeight &, const LogWeight &) = default;
  friend constexpr LogWeight operator*(LogWeight a, LogWeight b) noexcept { return {a.value + b.value}; }
  friend constexpr LogWeight operator/(LogWeight a, LogWeight b) noexcept { return {a.value - b.value}; }
};

/// ln Gamma(x) for x > 0. Throws DomainError for x <= 0 or non-finite x.
[[nodiscard]] double ln_gamma(double x);

/// psi(x) = d/dx ln Gamma(x) for x > 0. Throws DomainError otherwise.
[[nodiscard]] double digamma(double x);

/// ln sum_i exp(v_i) with max-shift. Returns -inf when every input is -inf.
/// Throws DomainError on empty input or NaN entries.
[[nodiscard]] double log_sum_exp(std::span<const double> values);

} // namespace semmap
