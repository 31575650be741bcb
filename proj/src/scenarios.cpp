#include "semmap/scenarios.hpp"

#include "semmap/bmm.hpp"
#include "semmap/conjugate_update.hpp"
#include "semmap/error.hpp"
#include "semmap/serialization.hpp"
#include "semmap/special_math.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <utility>

namespace semmap {

using nlohmann::json;

namespace {

constexpr double kTrueAlpha = 1000.0;
constexpr double kPriorDeflation = 0.1;

const char *kind_name(ScenarioKind k) {
  return k == ScenarioKind::toy_static ? "toy_static" : "driving_time_varying";
}

ScenarioKind parse_kind(const std::string &s) {
  if (s == "toy_static")
    return ScenarioKind::toy_static;
  if (s == "driving_time_varying")
    return ScenarioKind::driving_time_varying;
  throw DomainError(fmt::format("unknown scenario kind '{}'", s));
}

const char *policy_name(TargetPolicy p) { return p == TargetPolicy::copy_initial ? "copy_initial" : "explicit"; }

TargetPolicy parse_policy(const std::string &s) {
  if (s == "copy_initial")
    return TargetPolicy::copy_initial;
  if (s == "explicit")
    return TargetPolicy::explicit_params;
  throw DomainError(fmt::format("unknown p_inf_policy '{}'", s));
}

const char *matching_name(MeanMatching m) {
  return m == MeanMatching::precision_weighted ? "precision_weighted" : "first_moment";
}

MeanMatching parse_matching(const std::string &s) {
  if (s == "precision_weighted")
    return MeanMatching::precision_weighted;
  if (s == "first_moment")
    return MeanMatching::first_moment;
  throw DomainError(fmt::format("unknown mean_matching '{}'", s));
}

std::size_t positive_count(const json &j, const char *name) {
  if (!j.is_number_integer() || j.get<long long>() < 1)
    throw DomainError(fmt::format("'{}' must be an integer >= 1", name));
  return j.get<std::size_t>();
}

void validate(const ScenarioConfig &cfg) {
  if (cfg.J < 1 || cfg.K < 1 || cfg.N < 1)
    throw DomainError("scenario: J, K and N must all be >= 1");
  if (!std::isfinite(cfg.rate_hz) || cfg.rate_hz <= 0.0)
    throw DomainError(fmt::format("scenario: rate_hz must be finite and > 0, got {}", cfg.rate_hz));
  if (cfg.p_inf_policy == TargetPolicy::explicit_params) {
    if (!cfg.p_inf)
      throw DomainError("scenario: p_inf_policy 'explicit' requires p_inf");
    if (cfg.p_inf->classes() != cfg.K || cfg.p_inf->dim() != cfg.J)
      throw DimensionError("scenario: p_inf does not match (K, J)");
  }
  if (!std::isfinite(cfg.prior_mean_offset) || cfg.prior_mean_offset < 0.0)
    throw DomainError("scenario: prior_mean_offset must be finite and >= 0");
  if (cfg.kl_grid_points < 2)
    throw DomainError("scenario: kl_grid_points must be >= 2");
}

double uniform(Rng &rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Vector uniform_vector(Rng &rng, std::size_t n, double lo, double hi) {
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = uniform(rng, lo, hi);
  return v;
}

NormalGammaBlock true_block(Vector mu, const Vector &tau) {
  const Eigen::Index j = mu.size();
  Vector alpha = Vector::Constant(j, kTrueAlpha);
  Vector beta = alpha / tau;
  return {std::move(mu), Vector::Ones(j), std::move(alpha), std::move(beta)};
}

// mu_{0|0} = mu^t + delta, (lambda, alpha, beta)_{0|0} = 0.1 (lambda, alpha, beta)^t, a_{0|0} = 1.
MapParams perturbed_prior(const MapParams &truth, double offset, Rng &rng) {
  std::vector<NormalGammaBlock> blocks;
  blocks.reserve(truth.classes());
  for (const auto &b : truth.blocks()) {
    Vector mu = b.mu();
    if (offset > 0.0)
      mu += uniform_vector(rng, b.dim(), -offset, offset);
    blocks.emplace_back(std::move(mu), kPriorDeflation * b.lambda(), kPriorDeflation * b.alpha(),
                        kPriorDeflation * b.beta());
  }
  return {DirichletParams::uniform(truth.classes()), std::move(blocks)};
}

Vector lerp(const Vector &a, const Vector &b, double g) { return (1.0 - g) * a + g * b; }

bool same(const Vector &a, const Vector &b) { return a.size() == b.size() && (a == b).all(); }

bool same(const MapParams &a, const MapParams &b) {
  if (a.classes() != b.classes() || a.dim() != b.dim())
    return false;
  if (!same(a.dirichlet().concentration(), b.dirichlet().concentration()))
    return false;
  for (std::size_t i = 0; i < a.classes(); ++i) {
    const auto &x = a.block(i);
    const auto &y = b.block(i);
    if (!same(x.mu(), y.mu()) || !same(x.lambda(), y.lambda()) || !same(x.alpha(), y.alpha()) ||
        !same(x.beta(), y.beta()))
      return false;
  }
  return true;
}

double predictive_scale(const ScalarNormalGamma &b) {
  return std::sqrt(b.beta * (b.lambda + 1.0) / (b.alpha * b.lambda));
}

struct GridAxes {
  std::vector<std::vector<double>> axes;
  std::size_t points() const {
    std::size_t n = 1;
    for (const auto &a : axes)
      n *= a.size();
    return n;
  }
  Vector point(std::size_t flat) const {
    Vector x(static_cast<Eigen::Index>(axes.size()));
    for (std::size_t d = axes.size(); d-- > 0;) {
      x[static_cast<Eigen::Index>(d)] = axes[d][flat % axes[d].size()];
      flat /= axes[d].size();
    }
    return x;
  }
};

GridAxes grid_for(const MapParams &truth, std::size_t n) {
  if (truth.dim() > 2)
    throw DimensionError(fmt::format("grid evaluation needs J <= 2, got J={}", truth.dim()));
  GridAxes g;
  for (std::size_t d = 0; d < truth.dim(); ++d) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double sigma = 0.0;
    for (const auto &b : truth.blocks()) {
      const ScalarNormalGamma s = b.at(d);
      lo = std::min(lo, s.mu);
      hi = std::max(hi, s.mu);
      sigma = std::max(sigma, predictive_scale(s));
    }
    lo -= 4.0 * sigma;
    hi += 4.0 * sigma;
    std::vector<double> axis(n);
    for (std::size_t i = 0; i < n; ++i)
      axis[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    g.axes.push_back(std::move(axis));
  }
  return g;
}

// Log-probabilities of the predictive density at the grid nodes, normalised to sum to 1.
std::vector<double> grid_log_probs(const GridAxes &g, const MapParams &p) {
  std::vector<double> lp(g.points());
  for (std::size_t i = 0; i < lp.size(); ++i)
    lp[i] = log_predictive_density(p, g.point(i));
  const double z = log_sum_exp(lp);
  for (double &v : lp)
    v -= z;
  return lp;
}

double discrete_kl(const std::vector<double> &lp, const std::vector<double> &lq) {
  double kl = 0.0;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    if (std::isinf(lp[i]))
      continue;
    kl += std::exp(lp[i]) * (lp[i] - lq[i]);
  }
  return std::max(kl, 0.0);
}

std::string num(double v) { return fmt::format("{}", v); }

class CsvFile {
public:
  CsvFile() = default;
  CsvFile(const std::filesystem::path &path) : path_(path), out_(path, std::ios::binary) {
    if (!out_)
      throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  }
  bool is_open() const { return out_.is_open(); }
  void write(const std::string &line) {
    out_ << line << '\n';
    if (!out_)
      throw IoError(fmt::format("write to '{}' failed", path_.string()));
  }
  void close() {
    out_.close();
    if (out_.fail())
      throw IoError(fmt::format("closing '{}' failed", path_.string()));
  }

private:
  std::filesystem::path path_;
  std::ofstream out_;
};

void write_text(const std::filesystem::path &path, const std::string &text) {
  CsvFile f(path);
  f.write(text);
  f.close();
}

json errors_json(const RecoveryErrors &e) {
  return {{"weight_error", e.weight_error},
          {"dominant_mean_error", e.dominant_mean_error},
          {"matching", e.matching},
          {"matched_weight_error", e.matched_weight_error},
          {"matched_dominant_mean_error", e.matched_dominant_mean_error}};
}

std::vector<std::size_t> checkpoint_steps(const ScenarioConfig &cfg) {
  std::set<std::size_t> s(cfg.checkpoints.begin(), cfg.checkpoints.end());
  if (s.empty()) {
    s.insert(std::max<std::size_t>(cfg.N / 10, 1));
    s.insert(cfg.N);
  }
  for (std::size_t k : s) {
    if (k < 1 || k > cfg.N)
      throw DomainError(fmt::format("checkpoint {} outside 1..N={}", k, cfg.N));
  }
  return {s.begin(), s.end()};
}

} // namespace

ScenarioConfig default_scenario_config(ScenarioKind kind) {
  ScenarioConfig cfg;
  cfg.kind = kind;
  if (kind == ScenarioKind::driving_time_varying) {
    cfg.J = 2;
    cfg.K = 3;
    cfg.delta = TimeConstant(50.0);
    cfg.emit_labels = true;
    cfg.prior_mean_offset = 0.0;
  }
  return cfg;
}

ScenarioConfig scenario_config_from_json(const json &j) {
  if (!j.is_object())
    throw DomainError("scenario config must be a JSON object");
  ScenarioConfig cfg = default_scenario_config(parse_kind(j.value("kind", std::string("toy_static"))));
  if (j.contains("J"))
    cfg.J = positive_count(j["J"], "J");
  if (j.contains("K"))
    cfg.K = positive_count(j["K"], "K");
  if (j.contains("N"))
    cfg.N = positive_count(j["N"], "N");
  if (j.contains("rate_hz")) {
    if (!j["rate_hz"].is_number())
      throw DomainError("'rate_hz' must be a number");
    cfg.rate_hz = j["rate_hz"].get<double>();
  }
  if (j.contains("delta")) {
    const json &d = j["delta"];
    if (d.is_string() && (d.get<std::string>() == "inf" || d.get<std::string>() == "infinity"))
      cfg.delta = TimeConstant::infinite();
    else if (d.is_number())
      cfg.delta = TimeConstant(d.get<double>());
    else
      throw DomainError("'delta' must be a positive number or \"inf\"");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
      throw DomainError("'seed' must be a non-negative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("p_inf_policy"))
    cfg.p_inf_policy = parse_policy(j["p_inf_policy"].get<std::string>());
  if (j.contains("p_inf"))
    cfg.p_inf = map_params_from_json(j["p_inf"]);
  if (j.contains("prior_mean_offset"))
    cfg.prior_mean_offset = j["prior_mean_offset"].get<double>();
  if (j.contains("mean_matching"))
    cfg.mean_matching = parse_matching(j["mean_matching"].get<std::string>());
  if (j.contains("emit_labels"))
    cfg.emit_labels = j["emit_labels"].get<bool>();
  if (j.contains("checkpoints"))
    cfg.checkpoints = j["checkpoints"].get<std::vector<std::size_t>>();
  if (j.contains("record_every"))
    cfg.record_every = j["record_every"].get<std::size_t>();
  if (j.contains("kl_grid_points"))
    cfg.kl_grid_points = j["kl_grid_points"].get<std::size_t>();
  if (j.contains("out_dir"))
    cfg.out_dir = j["out_dir"].get<std::string>();
  validate(cfg);
  return cfg;
}

json to_json(const ScenarioConfig &cfg) {
  json j = {{"kind", kind_name(cfg.kind)},
            {"J", cfg.J},
            {"K", cfg.K},
            {"N", cfg.N},
            {"rate_hz", cfg.rate_hz},
            {"seed", cfg.seed},
            {"p_inf_policy", policy_name(cfg.p_inf_policy)},
            {"emit_labels", cfg.emit_labels},
            {"prior_mean_offset", cfg.prior_mean_offset},
            {"mean_matching", matching_name(cfg.mean_matching)},
            {"checkpoints", cfg.checkpoints},
            {"record_every", cfg.record_every},
            {"kl_grid_points", cfg.kl_grid_points}};
  if (cfg.delta.is_infinite())
    j["delta"] = "inf";
  else
    j["delta"] = cfg.delta.seconds();
  if (cfg.p_inf)
    j["p_inf"] = to_json(*cfg.p_inf);
  return j;
}

TruthTrajectory::TruthTrajectory(MapParams start, MapParams end, std::size_t steps)
    : start_(std::move(start)), end_(std::move(end)), steps_(steps), constant_(false) {
  if (steps_ < 1)
    throw DomainError("TruthTrajectory: steps must be >= 1");
  if (start_.classes() != end_.classes() || start_.dim() != end_.dim())
    throw DimensionError("TruthTrajectory: start and end differ in (K, J)");
  constant_ = same(start_, end_);
}

MapParams TruthTrajectory::at(std::size_t k) const {
  if (k > steps_)
    throw IndexError(fmt::format("TruthTrajectory: step {} beyond N={}", k, steps_));
  if (constant_ || k == 0)
    return start_;
  if (k == steps_)
    return end_;
  const double g = static_cast<double>(k) / static_cast<double>(steps_);
  std::vector<NormalGammaBlock> blocks;
  blocks.reserve(start_.classes());
  for (std::size_t i = 0; i < start_.classes(); ++i) {
    const auto &s = start_.block(i);
    const auto &e = end_.block(i);
    blocks.emplace_back(lerp(s.mu(), e.mu(), g), lerp(s.lambda(), e.lambda(), g), lerp(s.alpha(), e.alpha(), g),
                        lerp(s.beta(), e.beta(), g));
  }
  return {DirichletParams(lerp(start_.dirichlet().concentration(), end_.dirichlet().concentration(), g)),
          std::move(blocks)};
}

GeneratedScenario gen_toy(const ScenarioConfig &cfg, Rng &rng) {
  if (cfg.kind != ScenarioKind::toy_static)
    throw DomainError("gen_toy: config kind is not toy_static");
  if (cfg.J < 1 || cfg.K < 1)
    throw DomainError("gen_toy: J and K must be >= 1");
  Vector a = uniform_vector(rng, cfg.K, 1.0, 3.0);
  std::vector<NormalGammaBlock> blocks;
  blocks.reserve(cfg.K);
  for (std::size_t i = 0; i < cfg.K; ++i) {
    Vector mu = uniform_vector(rng, cfg.J, 0.0, 1.0);
    Vector tau = uniform_vector(rng, cfg.J, 100.0, 300.0);
    blocks.push_back(true_block(std::move(mu), tau));
  }
  MapParams truth(DirichletParams(std::move(a)), std::move(blocks));
  MapParams prior = perturbed_prior(truth, cfg.prior_mean_offset, rng);
  return {TruthTrajectory(truth, truth, cfg.N), std::move(prior)};
}

GeneratedScenario gen_driving(const ScenarioConfig &cfg, Rng &rng) {
  if (cfg.kind != ScenarioKind::driving_time_varying)
    throw DomainError("gen_driving: config kind is not driving_time_varying");
  if (cfg.J != 2 || cfg.K != 3)
    throw DimensionError(fmt::format("gen_driving: the friction map is defined for (J, K) = (2, 3), got ({}, {})",
                                     cfg.J, cfg.K));
  // Rows are property dimensions (front, rear), columns are classes.
  const double m0[2][3] = {{0.95, 0.8, 0.65}, {0.9, 0.7, 0.5}};
  Vector a0(3), aN(3);
  a0 << 50.0, 10.0, 10.0;
  aN << 10.0, 10.0, 50.0;

  std::vector<NormalGammaBlock> start, end;
  for (std::size_t i = 0; i < 3; ++i) {
    Vector mu0(2), muN(2);
    for (std::size_t d = 0; d < 2; ++d) {
      mu0[static_cast<Eigen::Index>(d)] = m0[d][i];
      muN[static_cast<Eigen::Index>(d)] = 0.9 * m0[d][i];
    }
    Vector tau = uniform_vector(rng, 2, 100.0, 300.0);
    start.push_back(true_block(std::move(mu0), tau));
    end.push_back(true_block(std::move(muN), tau));
  }
  MapParams truth0(DirichletParams(a0), std::move(start));
  MapParams truthN(DirichletParams(aN), std::move(end));
  MapParams prior = perturbed_prior(truth0, cfg.prior_mean_offset, rng);
  return {TruthTrajectory(std::move(truth0), std::move(truthN), cfg.N), std::move(prior)};
}

double grid_kl(const MapParams &truth, const MapParams &estimate, std::size_t points_per_axis) {
  if (truth.classes() != estimate.classes() || truth.dim() != estimate.dim())
    throw DimensionError("grid_kl: truth and estimate differ in (K, J)");
  if (points_per_axis < 2)
    throw DomainError("grid_kl: need at least 2 points per axis");
  const GridAxes g = grid_for(truth, points_per_axis);
  return discrete_kl(grid_log_probs(g, truth), grid_log_probs(g, estimate));
}

std::vector<std::size_t> match_classes(const MapParams &truth, const MapParams &estimate) {
  if (truth.classes() != estimate.classes() || truth.dim() != estimate.dim())
    throw DimensionError("match_classes: truth and estimate differ in (K, J)");
  const std::size_t k = truth.classes();
  std::vector<std::vector<double>> cost(k, std::vector<double>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j)
      cost[i][j] = (truth.block(i).mu() - estimate.block(j).mu()).square().sum();
  }
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  if (k <= 8) {
    std::vector<std::size_t> best = perm;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
      double c = 0.0;
      for (std::size_t i = 0; i < k; ++i)
        c += cost[i][perm[i]];
      if (c < best_cost) {
        best_cost = c;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  std::vector<bool> used(k, false);
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t pick = k;
    for (std::size_t j = 0; j < k; ++j) {
      if (!used[j] && (pick == k || cost[i][j] < cost[i][pick]))
        pick = j;
    }
    used[pick] = true;
    perm[i] = pick;
  }
  return perm;
}

namespace {

std::vector<std::size_t> resolve_perm(std::span<const std::size_t> perm, std::size_t k) {
  std::vector<std::size_t> out(k);
  if (perm.empty()) {
    std::iota(out.begin(), out.end(), 0);
    return out;
  }
  if (perm.size() != k)
    throw DimensionError("class permutation has the wrong length");
  std::vector<bool> seen(k, false);
  for (std::size_t i = 0; i < k; ++i) {
    if (perm[i] >= k || seen[perm[i]])
      throw IndexError("class permutation is not a permutation of 0..K-1");
    seen[perm[i]] = true;
    out[i] = perm[i];
  }
  return out;
}

} // namespace

double weight_error(const MapParams &truth, const MapParams &estimate, std::span<const std::size_t> perm) {
  if (truth.classes() != estimate.classes())
    throw DimensionError("weight_error: class counts differ");
  const auto p = resolve_perm(perm, truth.classes());
  const double t0 = truth.dirichlet().total();
  const double e0 = estimate.dirichlet().total();
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    sum += std::abs(truth.dirichlet()[i] / t0 - estimate.dirichlet()[p[i]] / e0);
  return sum / static_cast<double>(p.size());
}

double dominant_mean_error(const MapParams &truth, const MapParams &estimate, std::span<const std::size_t> perm) {
  if (truth.classes() != estimate.classes() || truth.dim() != estimate.dim())
    throw DimensionError("dominant_mean_error: truth and estimate differ in (K, J)");
  const auto p = resolve_perm(perm, truth.classes());
  Eigen::Index dom = 0;
  truth.dirichlet().concentration().maxCoeff(&dom);
  const auto i = static_cast<std::size_t>(dom);
  return (truth.block(i).mu() - estimate.block(p[i]).mu()).abs().maxCoeff();
}

RecoveryErrors recovery_errors(const MapParams &truth, const MapParams &estimate) {
  RecoveryErrors e;
  e.weight_error = weight_error(truth, estimate);
  e.dominant_mean_error = dominant_mean_error(truth, estimate);
  e.matching = match_classes(truth, estimate);
  e.matched_weight_error = weight_error(truth, estimate, e.matching);
  e.matched_dominant_mean_error = dominant_mean_error(truth, estimate, e.matching);
  return e;
}

std::string trajectory_csv_header(std::size_t K, std::size_t J) {
  std::string h = "step,time_s";
  for (std::size_t i = 0; i < K; ++i)
    h += fmt::format(",a_{}", i);
  for (std::size_t i = 0; i < K; ++i)
    h += fmt::format(",var_w_{}", i);
  for (std::size_t i = 0; i < K; ++i) {
    for (const char *name : {"mu", "lambda", "alpha", "beta"}) {
      for (std::size_t d = 0; d < J; ++d)
        h += fmt::format(",{}_{}_{}", name, i, d);
    }
  }
  return h;
}

std::string trajectory_csv_row(std::size_t step, double time_s, const MapParams &p) {
  std::string r = fmt::format("{},{}", step, num(time_s));
  const Vector &a = p.dirichlet().concentration();
  const double a0 = p.dirichlet().total();
  for (Eigen::Index i = 0; i < a.size(); ++i)
    r += "," + num(a[i]);
  for (Eigen::Index i = 0; i < a.size(); ++i)
    r += "," + num(a[i] * (a0 - a[i]) / (a0 * a0 * (a0 + 1.0)));
  for (const auto &b : p.blocks()) {
    for (const Vector *v : {&b.mu(), &b.lambda(), &b.alpha(), &b.beta()}) {
      for (Eigen::Index d = 0; d < v->size(); ++d)
        r += "," + num((*v)[d]);
    }
  }
  return r;
}

ScenarioResult run_scenario(const ScenarioConfig &cfg) {
  validate(cfg);
  const std::vector<std::size_t> checkpoints = checkpoint_steps(cfg);

  Rng truth_rng = make_rng(cfg.seed, 0);
  GeneratedScenario gen =
      cfg.kind == ScenarioKind::toy_static ? gen_toy(cfg, truth_rng) : gen_driving(cfg, truth_rng);
  const MapParams target = cfg.p_inf_policy == TargetPolicy::copy_initial ? gen.initial : *cfg.p_inf;
  const ForgettingConfig static_cfg{TimeConstant::infinite(), target};
  const ForgettingConfig dynamic_cfg{cfg.delta, target};

  CsvFile truth_csv, static_csv, dynamic_csv, kl_csv;
  const bool write = cfg.out_dir.has_value();
  const bool record = write && cfg.record_every > 0;
  if (write) {
    std::error_code ec;
    std::filesystem::create_directories(*cfg.out_dir, ec);
    if (ec)
      throw IoError(fmt::format("cannot create '{}': {}", cfg.out_dir->string(), ec.message()));
    if (record) {
      const std::string header = trajectory_csv_header(cfg.K, cfg.J);
      truth_csv = CsvFile(*cfg.out_dir / "truth.csv");
      static_csv = CsvFile(*cfg.out_dir / "static.csv");
      dynamic_csv = CsvFile(*cfg.out_dir / "dynamic.csv");
      for (CsvFile *f : {&truth_csv, &static_csv, &dynamic_csv})
        f->write(header);
      truth_csv.write(trajectory_csv_row(0, 0.0, gen.truth.at(0)));
      static_csv.write(trajectory_csv_row(0, 0.0, gen.initial));
      dynamic_csv.write(trajectory_csv_row(0, 0.0, gen.initial));
    }
    kl_csv = CsvFile(*cfg.out_dir / "checkpoints.csv");
    kl_csv.write("step,time_s,kl_static,kl_dynamic");
  }

  ScenarioResult result{gen.initial, gen.truth.end(), gen.initial, gen.initial, {}, {}, {}};
  FilterState st{gen.initial, std::nullopt};
  FilterState dy{gen.initial, std::nullopt};
  Rng sim_rng = make_rng(cfg.seed, 1);
  auto next_checkpoint = checkpoints.begin();

  for (std::size_t k = 1; k <= cfg.N; ++k) {
    const MapParams truth = gen.truth.at(k);
    const MapState theta = sample_state(truth, sim_rng);
    TimedMeasurement meas{static_cast<double>(k) / cfg.rate_hz, std::nullopt, sample_property(theta, sim_rng)};
    if (cfg.emit_labels)
      meas.label = sample_class(theta, sim_rng);

    st = step(st, meas, static_cfg, cfg.mean_matching);
    dy = step(dy, meas, dynamic_cfg, cfg.mean_matching);

    if (record && k % cfg.record_every == 0) {
      truth_csv.write(trajectory_csv_row(k, meas.time, truth));
      static_csv.write(trajectory_csv_row(k, meas.time, st.params));
      dynamic_csv.write(trajectory_csv_row(k, meas.time, dy.params));
    }

    if (next_checkpoint != checkpoints.end() && *next_checkpoint == k) {
      ++next_checkpoint;
      Checkpoint cp{k, meas.time, std::numeric_limits<double>::quiet_NaN(),
                    std::numeric_limits<double>::quiet_NaN()};
      if (cfg.J <= 2) {
        const GridAxes g = grid_for(truth, cfg.kl_grid_points);
        const auto lt = grid_log_probs(g, truth);
        const auto ls = grid_log_probs(g, st.params);
        const auto ld = grid_log_probs(g, dy.params);
        cp.kl_static = discrete_kl(lt, ls);
        cp.kl_dynamic = discrete_kl(lt, ld);
        if (write) {
          CsvFile lik(*cfg.out_dir / fmt::format("likelihood_{}.csv", k));
          std::string header;
          for (std::size_t d = 0; d < cfg.J; ++d)
            header += fmt::format("y_{},", d);
          lik.write(header + "p_true,p_static,p_dynamic");
          for (std::size_t i = 0; i < lt.size(); ++i) {
            std::string row;
            const Vector x = g.point(i);
            for (Eigen::Index d = 0; d < x.size(); ++d)
              row += num(x[d]) + ",";
            lik.write(row + num(std::exp(lt[i])) + "," + num(std::exp(ls[i])) + "," + num(std::exp(ld[i])));
          }
          lik.close();
        }
      }
      if (write)
        kl_csv.write(fmt::format("{},{},{},{}", k, num(cp.time_s), num(cp.kl_static), num(cp.kl_dynamic)));
      result.checkpoints.push_back(cp);
    }
  }

  result.static_final = st.params;
  result.dynamic_final = dy.params;
  result.static_errors = recovery_errors(result.truth_final, st.params);
  result.dynamic_errors = recovery_errors(result.truth_final, dy.params);

  if (write) {
    for (CsvFile *f : {&truth_csv, &static_csv, &dynamic_csv, &kl_csv}) {
      if (f->is_open())
        f->close();
    }
    json cps = json::array();
    for (const auto &cp : result.checkpoints) {
      json c = {{"step", cp.step}, {"time_s", cp.time_s}};
      c["kl_static"] = std::isnan(cp.kl_static) ? json(nullptr) : json(cp.kl_static);
      c["kl_dynamic"] = std::isnan(cp.kl_dynamic) ? json(nullptr) : json(cp.kl_dynamic);
      cps.push_back(std::move(c));
    }
    json manifest = {{"config", to_json(cfg)},
                     {"seed", cfg.seed},
                     {"truth_start", to_json(gen.truth.start())},
                     {"truth_end", to_json(gen.truth.end())},
                     {"initial", to_json(gen.initial)},
                     {"p_inf", to_json(target)},
                     {"static_final", to_json(result.static_final)},
                     {"dynamic_final", to_json(result.dynamic_final)},
                     {"checkpoints", std::move(cps)},
                     {"metrics", {{"static", errors_json(result.static_errors)},
                                  {"dynamic", errors_json(result.dynamic_errors)}}}};
    write_text(*cfg.out_dir / "manifest.json", manifest.dump(2));
  }
  return result;
}

BenchmarkResult run_benchmark(std::span<const std::size_t> j_list, std::size_t K, std::size_t n_reps,
                              std::uint64_t seed) {
  if (n_reps < kMinBenchmarkReps)
    throw DomainError(fmt::format("run_benchmark: n_reps must be >= {}, got {}", kMinBenchmarkReps, n_reps));
  if (j_list.empty() || K < 1)
    throw DomainError("run_benchmark: need at least one J and K >= 1");
  constexpr std::size_t kBatch = 1000;
  constexpr std::size_t kPool = 256;
  using clock = std::chrono::steady_clock;

  BenchmarkResult out;
  out.K = K;
  out.reps = n_reps;
  double sink = 0.0;
  struct Case {
    std::size_t J;
    MapParams prior;
    std::vector<Vector> pool;
    std::vector<double> per_call;
  };
  std::vector<Case> cases;
  for (std::size_t J : j_list) {
    if (J < 1)
      throw DomainError("run_benchmark: J must be >= 1");
    ScenarioConfig cfg;
    cfg.J = J;
    cfg.K = K;
    Rng rng = make_rng(seed, J);
    GeneratedScenario gen = gen_toy(cfg, rng);
    const MapParams truth = gen.truth.at(0);
    std::vector<Vector> pool;
    pool.reserve(kPool);
    for (std::size_t i = 0; i < kPool; ++i)
      pool.push_back(sample_property(sample_state(truth, rng), rng));
    for (std::size_t i = 0; i < kBatch; ++i)
      sink += bmm_property_update(gen.initial, pool[i % kPool]).dirichlet().total();
    cases.push_back({J, std::move(gen.initial), std::move(pool), {}});
  }

  // Batches for different J are interleaved so slow drifts in machine speed
  // spread evenly over the table.
  for (std::size_t done = 0; done < n_reps;) {
    const std::size_t n = std::min(kBatch, n_reps - done);
    for (Case &c : cases) {
      const auto t0 = clock::now();
      for (std::size_t i = 0; i < n; ++i)
        sink += bmm_property_update(c.prior, c.pool[(done + i) % kPool]).dirichlet().total();
      const auto t1 = clock::now();
      c.per_call.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count() / static_cast<double>(n));
    }
    done += n;
  }
  for (const Case &c : cases) {
    const auto &per_call = c.per_call;
    const double mean = std::accumulate(per_call.begin(), per_call.end(), 0.0) / static_cast<double>(per_call.size());
    double var = 0.0;
    for (double v : per_call)
      var += (v - mean) * (v - mean);
    const double sd = per_call.size() > 1 ? std::sqrt(var / static_cast<double>(per_call.size() - 1)) : 0.0;
    out.rows.push_back({c.J, mean, sd});
  }
  if (!std::isfinite(sink))
    throw Error("run_benchmark: non-finite update result");

  const double n = static_cast<double>(out.rows.size());
  double sx = 0.0, sy = 0.0;
  for (const auto &r : out.rows) {
    sx += static_cast<double>(r.J);
    sy += r.mean_ns;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto &r : out.rows) {
    const double dx = static_cast<double>(r.J) - mx;
    const double dy = r.mean_ns - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  out.slope_ns = sxx > 0.0 ? sxy / sxx : 0.0;
  out.intercept_ns = my - out.slope_ns * mx;
  double ss_res = 0.0;
  for (const auto &r : out.rows) {
    const double e = r.mean_ns - (out.intercept_ns + out.slope_ns * static_cast<double>(r.J));
    ss_res += e * e;
  }
  out.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return out;
}

std::string benchmark_csv(const BenchmarkResult &result) {
  std::string s = "J,mean_ns,std_ns\n";
  for (const auto &r : result.rows)
    s += fmt::format("{},{:.3f},{:.3f}\n", r.J, r.mean_ns, r.std_ns);
  return s;
}

} // namespace semmap
