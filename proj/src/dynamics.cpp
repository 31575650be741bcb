#include "semmap/dynamics.hpp"

#include "semmap/bmm.hpp"
#include "semmap/conjugate_update.hpp"
#include "semmap/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <utility>

namespace semmap {

namespace {

Vector forget(const Vector &value, const Vector &target, double c) { return target + c * (value - target); }

void require_same_shape(const MapParams &p, const MapParams &target) {
  if (p.classes() != target.classes() || p.dim() != target.dim())
    throw DimensionError(fmt::format("forgetting target has (K, J) = ({}, {}), map has ({}, {})", target.classes(),
                                     target.dim(), p.classes(), p.dim()));
}

} // namespace

TimeConstant::TimeConstant(double seconds) : seconds_(seconds), infinite_(false) {
  if (std::isnan(seconds) || seconds <= 0.0)
    throw DomainError(fmt::format("TimeConstant: must be > 0, got {}", seconds));
  infinite_ = std::isinf(seconds);
}

TimeConstant TimeConstant::infinite() noexcept { return TimeConstant(); }

double TimeConstant::seconds() const noexcept {
  return infinite_ ? std::numeric_limits<double>::infinity() : seconds_;
}

double TimeConstant::decay(double h) const {
  if (std::isnan(h) || h < 0.0)
    throw DomainError(fmt::format("predict: time step must be >= 0, got {}", h));
  if (infinite_ || h == 0.0)
    return 1.0;
  return std::exp(-h / seconds_);
}

double forget(double value, double target, double c) noexcept { return target + c * (value - target); }

DirichletParams predict(const DirichletParams &d, double c, const DirichletParams &target) {
  if (c == 1.0)
    return d;
  return DirichletParams(forget(d.concentration(), target.concentration(), c));
}

NormalGammaBlock predict(const NormalGammaBlock &b, double c, const NormalGammaBlock &target) {
  if (c == 1.0)
    return b;
  return {forget(b.mu(), target.mu(), c), forget(b.lambda(), target.lambda(), c),
          forget(b.alpha(), target.alpha(), c), forget(b.beta(), target.beta(), c)};
}

std::vector<NormalGammaBlock> predict(const std::vector<NormalGammaBlock> &blocks, double c,
                                      const std::vector<NormalGammaBlock> &target) {
  if (c == 1.0)
    return blocks;
  std::vector<NormalGammaBlock> out;
  out.reserve(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i)
    out.push_back(predict(blocks[i], c, target.at(i)));
  return out;
}

MapParams predict(const MapParams &p, double h, const ForgettingConfig &cfg) {
  const double c = cfg.delta.decay(h);
  require_same_shape(p, cfg.target);
  if (c == 1.0)
    return p;
  return {predict(p.dirichlet(), c, cfg.target.dirichlet()), predict(p.blocks(), c, cfg.target.blocks())};
}

double elapsed(const std::optional<double> &last, double now) {
  if (!std::isfinite(now))
    throw DomainError("measurement time must be finite");
  if (!last)
    return 0.0;
  if (now < *last)
    throw TimeRegressionError(fmt::format("time went backwards: {} after {}", now, *last));
  return now - *last;
}

FilterState step(const FilterState &state, const TimedMeasurement &meas, const ForgettingConfig &cfg,
                 MeanMatching matching) {
  if (!meas.label && !meas.property)
    throw DomainError("step: measurement carries neither a class label nor a property vector");
  const double h = elapsed(state.last_time, meas.time);
  MapParams p = predict(state.params, h, cfg);
  if (meas.property)
    p = bmm_property_update(p, *meas.property, matching);
  if (meas.label)
    p = categorical_update(p, *meas.label);
  return {std::move(p), meas.time};
}

} // namespace semmap
