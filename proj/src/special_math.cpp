#include "semmap/special_math.hpp"

#include "semmap/error.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <math.h>

namespace semmap {

namespace {

void require_positive(double x, const char *fn) {
  if (!std::isfinite(x) || x <= 0.0)
    throw DomainError(fmt::format("{}: argument must be finite and > 0, got {}", fn, x));
}

} // namespace

double ln_gamma(double x) {
  require_positive(x, "ln_gamma");
  int sign = 0;
  // reentrant variant: std::lgamma writes the global signgam
  return ::lgamma_r(x, &sign);
}

double digamma(double x) {
  require_positive(x, "digamma");
  return boost::math::digamma(x);
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty())
    throw DomainError("log_sum_exp: empty input");
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  double hi = neg_inf;
  for (double v : values) {
    if (std::isnan(v))
      throw DomainError("log_sum_exp: NaN input");
    hi = std::max(hi, v);
  }
  if (hi == neg_inf || hi == std::numeric_limits<double>::infinity())
    return hi;
  double acc = 0.0;
  for (double v : values)
    acc += std::exp(v - hi);
  return hi + std::log(acc);
}

} // namespace semmap
