#include "semmap/distributions.hpp"

#include "semmap/conjugate_update.hpp"
#include "semmap/error.hpp"
#include "semmap/special_math.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace semmap {

namespace {

void require_positive(const Vector &v, const char *what) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]) || v[i] <= 0.0)
      throw DomainError(fmt::format("{}[{}] must be finite and > 0, got {}", what, i, v[i]));
  }
}

void require_finite(const Vector &v, const char *what) {
  if (!v.allFinite())
    throw DomainError(fmt::format("{} contains non-finite values", what));
}

double uniform01(Rng &rng) { return std::generate_canonical<double, 53>(rng); }

ClassIndex draw_categorical(const Vector &w, Rng &rng) {
  const double u = uniform01(rng) * w.sum();
  double cum = 0.0;
  ClassIndex last_positive = 0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0)
      continue;
    cum += w[i];
    last_positive = static_cast<ClassIndex>(i);
    if (u < cum)
      return last_positive;
  }
  return last_positive;
}

} // namespace

DirichletParams::DirichletParams(Vector concentration) : a_(std::move(concentration)) {
  if (a_.size() < 1)
    throw DimensionError("DirichletParams: need at least one class");
  require_positive(a_, "DirichletParams.a");
  total_ = a_.sum();
  if (!std::isfinite(total_))
    throw DomainError("DirichletParams: total concentration overflows");
}

DirichletParams DirichletParams::uniform(std::size_t classes, double value) {
  return DirichletParams(Vector::Constant(static_cast<Eigen::Index>(classes), value));
}

NormalGammaBlock::NormalGammaBlock(Vector mu, Vector lambda, Vector alpha, Vector beta)
    : mu_(std::move(mu)), lambda_(std::move(lambda)), alpha_(std::move(alpha)), beta_(std::move(beta)) {
  if (mu_.size() < 1)
    throw DimensionError("NormalGammaBlock: need at least one dimension");
  if (lambda_.size() != mu_.size() || alpha_.size() != mu_.size() || beta_.size() != mu_.size())
    throw DimensionError(fmt::format("NormalGammaBlock: length mismatch mu={} lambda={} alpha={} beta={}",
                                     mu_.size(), lambda_.size(), alpha_.size(), beta_.size()));
  require_finite(mu_, "NormalGammaBlock.mu");
  require_positive(lambda_, "NormalGammaBlock.lambda");
  require_positive(alpha_, "NormalGammaBlock.alpha");
  require_positive(beta_, "NormalGammaBlock.beta");
}

NormalGammaBlock NormalGammaBlock::constant(std::size_t dim, const ScalarNormalGamma &value) {
  const auto n = static_cast<Eigen::Index>(dim);
  return {Vector::Constant(n, value.mu), Vector::Constant(n, value.lambda), Vector::Constant(n, value.alpha),
          Vector::Constant(n, value.beta)};
}

ScalarNormalGamma NormalGammaBlock::at(std::size_t n) const {
  if (n >= dim())
    throw IndexError(fmt::format("NormalGammaBlock::at: dimension {} out of range (J={})", n, dim()));
  const auto i = static_cast<Eigen::Index>(n);
  return {mu_[i], lambda_[i], alpha_[i], beta_[i]};
}

MapParams::MapParams(DirichletParams dirichlet, std::vector<NormalGammaBlock> blocks)
    : dirichlet_(std::move(dirichlet)), blocks_(std::move(blocks)) {
  if (blocks_.size() != dirichlet_.size())
    throw DimensionError(
        fmt::format("MapParams: {} blocks for {} Dirichlet classes", blocks_.size(), dirichlet_.size()));
  const std::size_t j = blocks_.front().dim();
  for (const auto &b : blocks_) {
    if (b.dim() != j)
      throw DimensionError(fmt::format("MapParams: blocks disagree on J ({} vs {})", b.dim(), j));
  }
}

MapState::MapState(Vector w, std::vector<Vector> m, std::vector<Vector> tau)
    : w_(std::move(w)), m_(std::move(m)), tau_(std::move(tau)) {
  const auto k = static_cast<std::size_t>(w_.size());
  if (k < 1 || m_.size() != k || tau_.size() != k)
    throw DimensionError("MapState: w, m and tau must all have K entries");
  if ((w_ < 0.0).any() || !w_.allFinite())
    throw DomainError("MapState: weights must be finite and nonnegative");
  if (std::abs(w_.sum() - 1.0) > 1e-12)
    throw DomainError(fmt::format("MapState: weights sum to {}, not 1", w_.sum()));
  const auto j = m_.front().size();
  for (std::size_t i = 0; i < k; ++i) {
    if (m_[i].size() != j || tau_[i].size() != j || j < 1)
      throw DimensionError("MapState: inconsistent property dimension");
    require_finite(m_[i], "MapState.m");
    require_positive(tau_[i], "MapState.tau");
  }
}

bool satisfies_moment_invariants(const PosteriorMoments &moments, double tol) {
  if (std::abs(moments.ew.sum() - 1.0) > tol)
    return false;
  if ((moments.ew2 > moments.ew + tol).any())
    return false;
  for (const auto &pm : moments.properties) {
    if ((pm.etau2 < pm.etau.square() * (1.0 - tol)).any())
      return false;
  }
  return true;
}

DirichletMoments dirichlet_moments(const DirichletParams &d) {
  const Vector &a = d.concentration();
  const double a0 = d.total();
  return {a / a0, a * (a + 1.0) / (a0 * (a0 + 1.0))};
}

NormalGammaMoments normal_gamma_moments(const NormalGammaBlock &b) {
  const Vector etau = b.alpha() / b.beta();
  return {
      b.mu(),
      etau,
      (b.alpha() + b.alpha().square()) / b.beta().square(),
      b.mu() * etau,
      b.lambda().inverse() + b.mu().square() * etau,
  };
}

PosteriorMoments prior_moments(const MapParams &p) {
  auto dm = dirichlet_moments(p.dirichlet());
  PosteriorMoments out{std::move(dm.ew), std::move(dm.ew2), {}};
  out.properties.reserve(p.classes());
  for (const auto &b : p.blocks())
    out.properties.push_back(normal_gamma_moments(b));
  return out;
}

double sample_log_gamma(double shape, Rng &rng) {
  if (shape >= 1.0) {
    std::gamma_distribution<double> g(shape, 1.0);
    return std::log(g(rng));
  }
  // Gamma(a) = Gamma(a + 1) * U^(1/a)
  std::gamma_distribution<double> g(shape + 1.0, 1.0);
  const double boosted = std::log(g(rng));
  const double u = 1.0 - uniform01(rng); // (0, 1]
  return boosted + std::log(u) / shape;
}

Vector sample_dirichlet(const DirichletParams &d, Rng &rng) {
  const auto k = static_cast<Eigen::Index>(d.size());
  Vector logs(k);
  for (Eigen::Index i = 0; i < k; ++i)
    logs[i] = sample_log_gamma(d.concentration()[i], rng);
  const double norm = log_sum_exp({logs.data(), static_cast<std::size_t>(k)});
  Vector w = (logs - norm).exp();
  return w / w.sum();
}

MapState sample_state(const MapParams &p, Rng &rng) {
  Vector w = sample_dirichlet(p.dirichlet(), rng);
  std::vector<Vector> m;
  std::vector<Vector> tau;
  m.reserve(p.classes());
  tau.reserve(p.classes());
  std::normal_distribution<double> std_normal(0.0, 1.0);
  constexpr double tiny = std::numeric_limits<double>::min();
  for (const auto &b : p.blocks()) {
    const auto j = static_cast<Eigen::Index>(b.dim());
    Vector mi(j), ti(j);
    for (Eigen::Index n = 0; n < j; ++n) {
      // rate beta: tau = Gamma(alpha, 1) / beta
      const double t = std::max(std::exp(sample_log_gamma(b.alpha()[n], rng) - std::log(b.beta()[n])), tiny);
      ti[n] = t;
      mi[n] = b.mu()[n] + std_normal(rng) / std::sqrt(b.lambda()[n] * t);
    }
    m.push_back(std::move(mi));
    tau.push_back(std::move(ti));
  }
  return {std::move(w), std::move(m), std::move(tau)};
}

ClassIndex sample_class(const MapState &theta, Rng &rng) { return draw_categorical(theta.w(), rng); }

Vector sample_property(const MapState &theta, Rng &rng) {
  const ClassIndex i = draw_categorical(theta.w(), rng);
  std::normal_distribution<double> std_normal(0.0, 1.0);
  const Vector &m = theta.m(i);
  const Vector &tau = theta.tau(i);
  Vector y(m.size());
  for (Eigen::Index n = 0; n < m.size(); ++n)
    y[n] = m[n] + std_normal(rng) / std::sqrt(tau[n]);
  return y;
}

double log_predictive_density(const MapParams &p, const Vector &y) {
  if (static_cast<std::size_t>(y.size()) != p.dim())
    throw DimensionError(fmt::format("predictive density: y has {} entries, map has J={}", y.size(), p.dim()));
  if (!y.allFinite())
    throw DomainError("predictive density: non-finite measurement");
  const std::size_t k = p.classes();
  std::vector<double> logs(k);
  const double log_a0 = std::log(p.dirichlet().total());
  for (std::size_t j = 0; j < k; ++j) {
    const auto &b = p.block(j);
    double acc = std::log(p.dirichlet()[j]) - log_a0;
    for (std::size_t n = 0; n < b.dim(); ++n)
      acc += ng_conjugate_update(b.at(n), y[static_cast<Eigen::Index>(n)]).log_c_star.value;
    logs[j] = acc;
  }
  return log_sum_exp(logs);
}

double predictive_density(const MapParams &p, const Vector &y) { return std::exp(log_predictive_density(p, y)); }

} // namespace semmap
