#pragma once

// Exponential forgetting of the map parameters toward a target set and the
// sequential predict/update filter loop.

#include "semmap/bmm.hpp"
#include "semmap/distributions.hpp"

#include <optional>
#include <vector>

namespace semmap {

/// Forgetting time constant in seconds; +infinity is an explicit state and
/// turns prediction into the identity.
class TimeConstant {
public:
  /// Throws DomainError unless seconds > 0 (+inf allowed).
  explicit TimeConstant(double seconds);

  [[nodiscard]] static TimeConstant infinite() noexcept;

  [[nodiscard]] bool is_infinite() const noexcept { return infinite_; }
  [[nodiscard]] double seconds() const noexcept;
  /// c = exp(-h / delta); exactly 1 when infinite or h == 0.
  [[nodiscard]] double decay(double h) const;

private:
  TimeConstant() = default;
  double seconds_{0.0};
  bool infinite_{true};
};

struct ForgettingConfig {
  TimeConstant delta;
  MapParams target; ///< P_inf
};

struct FilterState {
  MapParams params;                ///< P_{k|k}
  std::optional<double> last_time; ///< unset before the first measurement
};

/// Class label, property vector, or both, observed at one instant.
struct TimedMeasurement {
  double time{0.0};
  std::optional<ClassIndex> label;
  std::optional<Vector> property;
};

/// x' = x_inf + c (x - x_inf) for every scalar parameter, c = exp(-h / delta).
[[nodiscard]] double forget(double value, double target, double c) noexcept;

[[nodiscard]] DirichletParams predict(const DirichletParams &d, double c, const DirichletParams &target);
[[nodiscard]] NormalGammaBlock predict(const NormalGammaBlock &b, double c, const NormalGammaBlock &target);
[[nodiscard]] std::vector<NormalGammaBlock> predict(const std::vector<NormalGammaBlock> &blocks, double c,
                                                    const std::vector<NormalGammaBlock> &target);

/// Prediction over a gap of h >= 0 seconds. Throws DomainError for h < 0 and
/// DimensionError when the target's (K, J) differs from p's.
[[nodiscard]] MapParams predict(const MapParams &p, double h, const ForgettingConfig &cfg);

/// One filter iteration: predict to meas.time, then the property update (if
/// any), then the categorical update (if any).
[[nodiscard]] FilterState step(const FilterState &state, const TimedMeasurement &meas, const ForgettingConfig &cfg,
                               MeanMatching matching = MeanMatching::precision_weighted);

/// Elapsed time since `last`; 0 when unset. Throws TimeRegressionError.
[[nodiscard]] double elapsed(const std::optional<double> &last, double now);

} // namespace semmap
