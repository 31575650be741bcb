#pragma once

// Parameter containers and sufficient-moment evaluation for the
// Dirichlet-normal-gamma map prior
//
//   p(Theta; P) = D(w | a) prod_i prod_j NG(m_ij, tau_ij | mu_ij, lambda_ij, alpha_ij, beta_ij)
//
// K semantic classes, J property dimensions. All containers validate on
// construction and are immutable afterwards.

#include "semmap/random.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace semmap {

using Vector = Eigen::ArrayXd;

/// 0-based semantic class label.
using ClassIndex = std::size_t;

/// Dirichlet concentration a (K entries, all > 0).
class DirichletParams {
public:
  explicit DirichletParams(Vector concentration);

  [[nodiscard]] static DirichletParams uniform(std::size_t classes, double value = 1.0);

  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(a_.size()); }
  [[nodiscard]] const Vector &concentration() const noexcept { return a_; }
  [[nodiscard]] double operator[](std::size_t i) const noexcept { return a_[static_cast<Eigen::Index>(i)]; }
  /// a_0 = sum_i a_i
  [[nodiscard]] double total() const noexcept { return total_; }

private:
  Vector a_;
  double total_{0.0};
};

/// One dimension of a normal-gamma block.
struct ScalarNormalGamma {
  double mu{0.0};
  double lambda{1.0};
  double alpha{1.0};
  double beta{1.0};
};

/// Per-dimension normal-gamma parameters of one class (diagonal precision).
class NormalGammaBlock {
public:
  NormalGammaBlock(Vector mu, Vector lambda, Vector alpha, Vector beta);

  /// Every dimension set to the same scalar parameters.
  [[nodiscard]] static NormalGammaBlock constant(std::size_t dim, const ScalarNormalGamma &value);

  [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(mu_.size()); }
  [[nodiscard]] const Vector &mu() const noexcept { return mu_; }
  [[nodiscard]] const Vector &lambda() const noexcept { return lambda_; }
  [[nodiscard]] const Vector &alpha() const noexcept { return alpha_; }
  [[nodiscard]] const Vector &beta() const noexcept { return beta_; }
  [[nodiscard]] ScalarNormalGamma at(std::size_t n) const;

private:
  Vector mu_, lambda_, alpha_, beta_;
};

/// The full parameter set P: one Dirichlet plus K blocks sharing J.
class MapParams {
public:
  MapParams(DirichletParams dirichlet, std::vector<NormalGammaBlock> blocks);

  [[nodiscard]] std::size_t classes() const noexcept { return blocks_.size(); }
  [[nodiscard]] std::size_t dim() const noexcept { return blocks_.front().dim(); }
  [[nodiscard]] const DirichletParams &dirichlet() const noexcept { return dirichlet_; }
  [[nodiscard]] const std::vector<NormalGammaBlock> &blocks() const noexcept { return blocks_; }
  [[nodiscard]] const NormalGammaBlock &block(ClassIndex i) const { return blocks_.at(i); }

private:
  DirichletParams dirichlet_;
  std::vector<NormalGammaBlock> blocks_;
};

/// A latent map sample Theta = {(w_i, m_i, tau_i)}.
class MapState {
public:
  MapState(Vector w, std::vector<Vector> m, std::vector<Vector> tau);

  [[nodiscard]] std::size_t classes() const noexcept { return m_.size(); }
  [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.front().size()); }
  [[nodiscard]] const Vector &w() const noexcept { return w_; }
  [[nodiscard]] const Vector &m(ClassIndex i) const { return m_.at(i); }
  [[nodiscard]] const Vector &tau(ClassIndex i) const { return tau_.at(i); }

private:
  Vector w_;
  std::vector<Vector> m_;
  std::vector<Vector> tau_;
};

struct DirichletMoments {
  Vector ew;  ///< E[w_i]
  Vector ew2; ///< E[w_i^2]
};

struct NormalGammaMoments {
  Vector em;     ///< E[m]
  Vector etau;   ///< E[tau]
  Vector etau2;  ///< E[tau^2]
  Vector emtau;  ///< E[m tau]
  Vector em2tau; ///< E[m^2 tau]
};

/// The sufficient-moment set {w, w^2, m, m tau, m^2 tau, tau, tau^2} per class.
struct PosteriorMoments {
  Vector ew;
  Vector ew2;
  std::vector<NormalGammaMoments> properties;

  [[nodiscard]] std::size_t classes() const noexcept { return properties.size(); }
};

/// Checks E[w^2] <= E[w], E[tau^2] >= E[tau]^2 and sum E[w] = 1, each up to `tol`.
[[nodiscard]] bool satisfies_moment_invariants(const PosteriorMoments &moments, double tol = 1e-10);

[[nodiscard]] DirichletMoments dirichlet_moments(const DirichletParams &d);
[[nodiscard]] NormalGammaMoments normal_gamma_moments(const NormalGammaBlock &b);

/// Moments of p(Theta; P) itself (no measurement).
[[nodiscard]] PosteriorMoments prior_moments(const MapParams &p);

/// Theta ~ p(Theta; P).
[[nodiscard]] MapState sample_state(const MapParams &p, Rng &rng);

/// Class i ~ Categorical(w), then y_j ~ N(m_ij, 1/tau_ij) independently.
[[nodiscard]] Vector sample_property(const MapState &theta, Rng &rng);

/// c ~ Categorical(w).
[[nodiscard]] ClassIndex sample_class(const MapState &theta, Rng &rng);

/// Prior-predictive density p(y) = sum_j u_j c*_j under P.
[[nodiscard]] double predictive_density(const MapParams &p, const Vector &y);

/// ln p(y); finite even where the density underflows.
[[nodiscard]] double log_predictive_density(const MapParams &p, const Vector &y);

/// ln of a Gamma(shape, 1) variate; accurate for shapes far below 1.
[[nodiscard]] double sample_log_gamma(double shape, Rng &rng);

/// Dirichlet draw, normalised in log space.
[[nodiscard]] Vector sample_dirichlet(const DirichletParams &d, Rng &rng);

} // namespace semmap
