#include "semmap/oracle.hpp"

#include "semmap/conjugate_update.hpp"
#include "semmap/error.hpp"

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

namespace semmap::oracle {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();
const double log_two_pi = std::log(2.0 * std::numbers::pi);

double log_normal_pdf(double x, double mean, double precision) {
  const double d = x - mean;
  return 0.5 * (std::log(precision) - log_two_pi) - 0.5 * precision * d * d;
}

// ---------------------------------------------------------------------------
// adaptive Simpson

template <class F> struct Simpson {
  F &f;
  bool converged{true};

  double refine(double a, double b, double fa, double fm, double fb, double whole, double eps, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * eps)
      return left + right + delta / 15.0;
    if (depth <= 0) {
      converged = false;
      return left + right + delta / 15.0;
    }
    return refine(a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
           refine(m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
  }
};

// Uniform panels first so narrow peaks are not skipped, then per-panel
// adaptive refinement to an absolute tolerance derived from the coarse sum.
template <class F> double integrate(F &&f, double a, double b, double rel_tol, int panels, int max_depth) {
  const double h = (b - a) / panels;
  std::vector<double> nodes(2 * panels + 1);
  for (int i = 0; i <= 2 * panels; ++i)
    nodes[i] = f(a + 0.5 * h * i);
  double coarse = 0.0;
  for (int p = 0; p < panels; ++p)
    coarse += h / 6.0 * (nodes[2 * p] + 4.0 * nodes[2 * p + 1] + nodes[2 * p + 2]);
  if (coarse == 0.0)
    return 0.0;
  const double eps = rel_tol * std::abs(coarse) / panels;
  Simpson<std::remove_reference_t<F>> s{f};
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + h * p;
    const double whole = h / 6.0 * (nodes[2 * p] + 4.0 * nodes[2 * p + 1] + nodes[2 * p + 2]);
    total += s.refine(lo, lo + h, nodes[2 * p], nodes[2 * p + 1], nodes[2 * p + 2], whole, eps, max_depth);
  }
  if (!s.converged)
    throw OracleError("adaptive Simpson did not converge");
  return total;
}

// ---------------------------------------------------------------------------
// importance-sampling accumulators

// Flattened moment layout per class: w, w^2, then for each of
// m, tau, tau^2, m tau, m^2 tau a run of J values.
std::size_t moment_stride(std::size_t j) { return 2 + 5 * j; }

PosteriorMoments unflatten(const std::vector<double> &v, std::size_t k, std::size_t j) {
  PosteriorMoments out;
  out.ew.resize(static_cast<Eigen::Index>(k));
  out.ew2.resize(static_cast<Eigen::Index>(k));
  const std::size_t stride = moment_stride(j);
  const auto jj = static_cast<Eigen::Index>(j);
  for (std::size_t i = 0; i < k; ++i) {
    const double *base = v.data() + i * stride;
    out.ew[static_cast<Eigen::Index>(i)] = base[0];
    out.ew2[static_cast<Eigen::Index>(i)] = base[1];
    auto run = [&](std::size_t r) { return Vector(Eigen::Map<const Vector>(base + 2 + r * j, jj)); };
    out.properties.push_back({run(0), run(1), run(2), run(3), run(4)});
  }
  return out;
}

struct WeightedSums {
  std::vector<double> s1, q1, q2;
  double s0{0.0}, q0{0.0};
  double ref{neg_inf};

  explicit WeightedSums(std::size_t n) : s1(n, 0.0), q1(n, 0.0), q2(n, 0.0) {}

  void add(double log_w, const std::vector<double> &g) {
    if (log_w == neg_inf)
      return;
    if (log_w > ref) {
      if (ref != neg_inf) {
        const double scale = std::exp(ref - log_w);
        const double scale2 = scale * scale;
        s0 *= scale;
        q0 *= scale2;
        for (std::size_t i = 0; i < g.size(); ++i) {
          s1[i] *= scale;
          q1[i] *= scale2;
          q2[i] *= scale2;
        }
      }
      ref = log_w;
    }
    const double w = std::exp(log_w - ref);
    const double w2 = w * w;
    s0 += w;
    q0 += w2;
    for (std::size_t i = 0; i < g.size(); ++i) {
      s1[i] += w * g[i];
      q1[i] += w2 * g[i];
      q2[i] += w2 * g[i] * g[i];
    }
  }

  [[nodiscard]] double ess() const { return s0 > 0.0 ? s0 * s0 / q0 : 0.0; }
};

void flatten_state(const MapState &theta, std::vector<double> &g) {
  const std::size_t j = theta.dim();
  const std::size_t stride = moment_stride(j);
  for (std::size_t i = 0; i < theta.classes(); ++i) {
    double *base = g.data() + i * stride;
    const double w = theta.w()[static_cast<Eigen::Index>(i)];
    base[0] = w;
    base[1] = w * w;
    const Vector &m = theta.m(i);
    const Vector &tau = theta.tau(i);
    for (std::size_t n = 0; n < j; ++n) {
      const auto nn = static_cast<Eigen::Index>(n);
      base[2 + n] = m[nn];
      base[2 + j + n] = tau[nn];
      base[2 + 2 * j + n] = tau[nn] * tau[nn];
      base[2 + 3 * j + n] = m[nn] * tau[nn];
      base[2 + 4 * j + n] = m[nn] * m[nn] * tau[nn];
    }
  }
}

double log_likelihood(const MapState &theta, std::span<const Vector> ys) {
  double total = 0.0;
  std::vector<double> per_class(theta.classes());
  for (const Vector &y : ys) {
    for (std::size_t i = 0; i < theta.classes(); ++i) {
      double acc = std::log(theta.w()[static_cast<Eigen::Index>(i)]);
      const Vector &m = theta.m(i);
      const Vector &tau = theta.tau(i);
      for (Eigen::Index n = 0; n < y.size(); ++n)
        acc += log_normal_pdf(y[n], m[n], tau[n]);
      per_class[i] = acc;
    }
    total += log_sum_exp(per_class);
  }
  return total;
}

WeightedSums importance_sums(const MapParams &p, std::span<const Vector> ys, std::size_t n_samples, Rng &rng) {
  for (const auto &y : ys) {
    if (static_cast<std::size_t>(y.size()) != p.dim())
      throw DimensionError("mc_moments: measurement dimension does not match J");
  }
  const std::size_t len = p.classes() * moment_stride(p.dim());
  WeightedSums sums(len);
  std::vector<double> g(len);
  for (std::size_t s = 0; s < n_samples; ++s) {
    const MapState theta = sample_state(p, rng);
    flatten_state(theta, g);
    sums.add(log_likelihood(theta, ys), g);
  }
  return sums;
}

// Batch marginal of n scalar observations under one normal-gamma factor.
double batch_ng_log_marginal(const ScalarNormalGamma &b, std::span<const double> obs) {
  const double n = static_cast<double>(obs.size());
  if (obs.empty())
    return 0.0;
  double mean = 0.0;
  for (double v : obs)
    mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : obs)
    ss += (v - mean) * (v - mean);
  const double lambda_n = b.lambda + n;
  const double alpha_n = b.alpha + 0.5 * n;
  const double beta_n = b.beta + 0.5 * ss + b.lambda * n * (mean - b.mu) * (mean - b.mu) / (2.0 * lambda_n);
  return boost::math::lgamma(alpha_n) - boost::math::lgamma(b.alpha) + b.alpha * std::log(b.beta) - alpha_n * std::log(beta_n) +
         0.5 * (std::log(b.lambda) - std::log(lambda_n)) - 0.5 * n * log_two_pi;
}

} // namespace

// ---------------------------------------------------------------------------

ExactMixturePosterior::ExactMixturePosterior(MapParams prior) { terms_.push_back({LogWeight::one(), std::move(prior)}); }

ExactMixturePosterior exact_update(const ExactMixturePosterior &post, const Vector &y) {
  const std::size_t k = post.terms_.front().params.classes();
  if (post.terms_.size() * k > kMaxExactTerms)
    throw OracleError(fmt::format("exact_update: {} x {} terms exceeds the {} guard", post.terms_.size(), k,
                                  kMaxExactTerms));
  ExactMixturePosterior out;
  out.terms_.reserve(post.terms_.size() * k);
  std::vector<double> log_weights;
  log_weights.reserve(post.terms_.size() * k);
  for (const auto &term : post.terms_) {
    const auto mpt = mixture_posterior_terms(term.params, y);
    for (std::size_t j = 0; j < k; ++j) {
      const auto &t = mpt.terms[j];
      const double lw = term.log_weight.value + std::log(t.u) + t.log_c_star.value;
      if (lw == neg_inf)
        continue;
      std::vector<NormalGammaBlock> blocks = term.params.blocks();
      blocks[j] = t.block_star;
      out.terms_.push_back({{lw}, MapParams(mpt.tilted_dirichlet(j), std::move(blocks))});
      log_weights.push_back(lw);
    }
  }
  const double step_evidence = log_sum_exp(log_weights);
  for (auto &t : out.terms_)
    t.log_weight.value -= step_evidence;
  out.measurements_ = post.measurements_ + 1;
  out.log_evidence_ = post.log_evidence_ + step_evidence;
  return out;
}

PosteriorMoments exact_moments(const ExactMixturePosterior &post) {
  const auto &first = post.terms().front().params;
  const auto k = static_cast<Eigen::Index>(first.classes());
  const auto j = static_cast<Eigen::Index>(first.dim());
  PosteriorMoments acc;
  acc.ew = Vector::Zero(k);
  acc.ew2 = Vector::Zero(k);
  for (Eigen::Index i = 0; i < k; ++i)
    acc.properties.push_back(
        {Vector::Zero(j), Vector::Zero(j), Vector::Zero(j), Vector::Zero(j), Vector::Zero(j)});

  for (const auto &term : post.terms()) {
    const double w = term.log_weight.exp();
    const auto d = dirichlet_moments(term.params.dirichlet());
    acc.ew += w * d.ew;
    acc.ew2 += w * d.ew2;
    for (std::size_t i = 0; i < term.params.classes(); ++i) {
      const auto g = normal_gamma_moments(term.params.block(i));
      auto &a = acc.properties[i];
      a.em += w * g.em;
      a.etau += w * g.etau;
      a.etau2 += w * g.etau2;
      a.emtau += w * g.emtau;
      a.em2tau += w * g.em2tau;
    }
  }
  return acc;
}

double enumerated_log_evidence(const MapParams &prior, std::span<const Vector> ys) {
  const std::size_t k = prior.classes();
  const std::size_t n = ys.size();
  double combos = 1.0;
  for (std::size_t i = 0; i < n; ++i)
    combos *= static_cast<double>(k);
  if (combos > static_cast<double>(kMaxExactTerms))
    throw OracleError("enumerated_log_evidence: too many assignments");
  if (n == 0)
    return 0.0;

  const Vector &a = prior.dirichlet().concentration();
  const double a0 = prior.dirichlet().total();
  std::vector<std::size_t> z(n, 0);
  std::vector<double> terms;
  std::vector<double> obs;
  while (true) {
    std::vector<double> counts(k, 0.0);
    for (std::size_t t = 0; t < n; ++t)
      counts[z[t]] += 1.0;
    double lp = boost::math::lgamma(a0) - boost::math::lgamma(a0 + static_cast<double>(n));
    for (std::size_t i = 0; i < k; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      lp += boost::math::lgamma(a[ii] + counts[i]) - boost::math::lgamma(a[ii]);
      for (std::size_t d = 0; d < prior.dim(); ++d) {
        obs.clear();
        for (std::size_t t = 0; t < n; ++t) {
          if (z[t] == i)
            obs.push_back(ys[t][static_cast<Eigen::Index>(d)]);
        }
        lp += batch_ng_log_marginal(prior.block(i).at(d), obs);
      }
    }
    terms.push_back(lp);

    std::size_t pos = 0;
    while (pos < n && ++z[pos] == k)
      z[pos++] = 0;
    if (pos == n)
      break;
  }
  return log_sum_exp(terms);
}

McMoments mc_moments(const MapParams &p, std::span<const Vector> ys, std::size_t n_samples, Rng &rng) {
  if (n_samples < kMinMcSamples)
    throw DomainError(fmt::format("mc_moments: need at least {} samples, got {}", kMinMcSamples, n_samples));
  const WeightedSums sums = importance_sums(p, ys, n_samples, rng);
  const double ess = sums.ess();
  if (ess < kMinEffectiveSampleSize)
    throw OracleError(fmt::format("mc_moments: effective sample size {:.1f} below {}", ess, kMinEffectiveSampleSize));

  std::vector<double> mean(sums.s1.size()), se(sums.s1.size());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double mu = sums.s1[i] / sums.s0;
    mean[i] = mu;
    const double var = (sums.q2[i] - 2.0 * mu * sums.q1[i] + mu * mu * sums.q0) / (sums.s0 * sums.s0);
    se[i] = std::sqrt(std::max(var, 0.0));
  }
  return {unflatten(mean, p.classes(), p.dim()), unflatten(se, p.classes(), p.dim()), ess};
}

double mc_effective_sample_size(const MapParams &p, std::span<const Vector> ys, std::size_t n_samples, Rng &rng) {
  return importance_sums(p, ys, n_samples, rng).ess();
}

McEstimate mc_weight_mean(const DirichletParams &a, ClassIndex j, std::size_t n_samples, Rng &rng) {
  if (j >= a.size())
    throw IndexError("mc_weight_mean: class out of range");
  if (n_samples < 2)
    throw DomainError("mc_weight_mean: need at least two samples");
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const double w = sample_dirichlet(a, rng)[static_cast<Eigen::Index>(j)];
    sum += w;
    sum2 += w * w;
  }
  const double n = static_cast<double>(n_samples);
  const double mean = sum / n;
  const double var = std::max(sum2 / n - mean * mean, 0.0) * n / (n - 1.0);
  return {mean, std::sqrt(var / n)};
}

double normaliser_quadrature(const ScalarNormalGamma &b, double y) {
  if (!std::isfinite(y))
    throw DomainError("normaliser_quadrature: non-finite measurement");
  // tau marginal of the integrand is bounded by a Gamma(alpha + 1/2, beta) shape
  const boost::math::gamma_distribution<double> envelope(b.alpha + 0.5, 1.0 / b.beta);
  const double tau_lo = std::min(1e-9, boost::math::quantile(envelope, 1e-12));
  const double tau_hi = boost::math::quantile(boost::math::complement(envelope, 1e-12));

  const double log_gamma_norm = b.alpha * std::log(b.beta) - boost::math::lgamma(b.alpha);
  constexpr double rel_tol = 1e-9;

  auto outer = [&](double s) {
    const double tau = std::exp(s);
    const double halfwidth = 12.0 * std::max(1.0 / std::sqrt(tau), 1.0 / std::sqrt(b.lambda * tau));
    const double lo = std::min(b.mu, y) - halfwidth;
    const double hi = std::max(b.mu, y) + halfwidth;
    auto inner = [&](double m) {
      return std::exp(log_normal_pdf(y, m, tau) + log_normal_pdf(m, b.mu, b.lambda * tau));
    };
    const double over_m = integrate(inner, lo, hi, rel_tol, 256, 30);
    const double log_gamma_pdf = log_gamma_norm + (b.alpha - 1.0) * s - b.beta * tau;
    return over_m * std::exp(log_gamma_pdf + s); // d tau = tau ds
  };
  return integrate(outer, std::log(tau_lo), std::log(tau_hi), rel_tol, 256, 30);
}

double quadrature_check_normaliser(const ScalarNormalGamma &b, double y) {
  const double closed = ng_conjugate_update(b, y).log_c_star.exp();
  return std::abs(normaliser_quadrature(b, y) - closed) / closed;
}

ScalarNormalGamma random_scalar_prior(Rng &rng) {
  auto u = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  ScalarNormalGamma b;
  b.mu = u(-2.0, 2.0);
  b.lambda = u(0.2, 5.0);
  b.alpha = u(1.5, 10.0);
  b.beta = u(0.2, 5.0);
  return b;
}

DirichletParams random_dirichlet(std::size_t k, Rng &rng) {
  std::uniform_real_distribution<double> u(0.5, 5.0);
  Vector a(static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < a.size(); ++i)
    a[i] = u(rng);
  return DirichletParams(std::move(a));
}

MapParams random_map_params(std::size_t k, std::size_t j, Rng &rng) {
  DirichletParams d = random_dirichlet(k, rng);
  std::vector<NormalGammaBlock> blocks;
  blocks.reserve(k);
  const auto n = static_cast<Eigen::Index>(j);
  for (std::size_t i = 0; i < k; ++i) {
    Vector mu(n), lambda(n), alpha(n), beta(n);
    for (Eigen::Index d = 0; d < n; ++d) {
      const ScalarNormalGamma s = random_scalar_prior(rng);
      mu[d] = s.mu;
      lambda[d] = s.lambda;
      alpha[d] = s.alpha;
      beta[d] = s.beta;
    }
    blocks.emplace_back(std::move(mu), std::move(lambda), std::move(alpha), std::move(beta));
  }
  return {std::move(d), std::move(blocks)};
}

Vector random_measurement(const MapParams &p, Rng &rng) { return sample_property(sample_state(p, rng), rng); }

} // namespace semmap::oracle
