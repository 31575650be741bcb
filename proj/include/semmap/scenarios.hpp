#pragma once

// Simulation scenarios (static toy map, time-varying driving map), the
// grid KL metric, and the update-time benchmark.

#include "semmap/bmm.hpp"
#include "semmap/distributions.hpp"
#include "semmap/dynamics.hpp"
#include "semmap/random.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace semmap {

enum class ScenarioKind { toy_static, driving_time_varying };
enum class TargetPolicy { copy_initial, explicit_params };

struct ScenarioConfig {
  ScenarioKind kind{ScenarioKind::toy_static};
  std::size_t J{5};
  std::size_t K{5};
  std::size_t N{10'000};
  double rate_hz{10.0};
  TimeConstant delta{TimeConstant::infinite()}; ///< dynamic filter; the static one always uses infinity
  std::uint64_t seed{0};
  TargetPolicy p_inf_policy{TargetPolicy::copy_initial};
  std::optional<MapParams> p_inf; ///< required for explicit_params
  bool emit_labels{false};        ///< also feed categorical measurements
  double prior_mean_offset{0.5};  ///< prior means are mu^t + U[-offset, offset]^J
  MeanMatching mean_matching{MeanMatching::precision_weighted};
  std::vector<std::size_t> checkpoints; ///< steps with KL evaluation; empty = {N/10, N}
  std::size_t record_every{1};          ///< CSV row stride, 0 disables trajectories
  std::size_t kl_grid_points{200};
  std::optional<std::filesystem::path> out_dir;
};

/// Defaults per kind: toy (J, K) = (5, 5), delta = inf, property only, prior
/// mean offset 0.5; driving (J, K) = (2, 3), delta = 50 s, labels and
/// properties, prior centred on the initial truth (offset 0).
[[nodiscard]] ScenarioConfig default_scenario_config(ScenarioKind kind);

/// Field names mirror ScenarioConfig; "delta" accepts a number or "inf".
/// Missing fields take the defaults of the given "kind".
[[nodiscard]] ScenarioConfig scenario_config_from_json(const nlohmann::json &j);
[[nodiscard]] nlohmann::json to_json(const ScenarioConfig &cfg);

/// True parameters over steps k = 0..N, every scalar linearly interpolated
/// with gamma_k = k / N between `start` and `end`.
class TruthTrajectory {
public:
  TruthTrajectory(MapParams start, MapParams end, std::size_t steps);

  [[nodiscard]] MapParams at(std::size_t k) const;
  [[nodiscard]] const MapParams &start() const noexcept { return start_; }
  [[nodiscard]] const MapParams &end() const noexcept { return end_; }
  [[nodiscard]] std::size_t steps() const noexcept { return steps_; }
  [[nodiscard]] bool is_constant() const noexcept { return constant_; }

private:
  MapParams start_;
  MapParams end_;
  std::size_t steps_;
  bool constant_;
};

struct GeneratedScenario {
  TruthTrajectory truth;
  MapParams initial; ///< P_{0|0}
};

/// a^t ~ U[1,3]^K, mu^t ~ U[0,1]^J, tau^t ~ U[100,300]^J, lambda^t = 1,
/// alpha^t = 1000, beta^t = alpha^t / tau^t; prior perturbs mu by U[-0.5,0.5]^J,
/// scales (lambda, alpha, beta) by 0.1 and sets a = 1.
[[nodiscard]] GeneratedScenario gen_toy(const ScenarioConfig &cfg, Rng &rng);

/// Friction map: class means interpolate M_0 -> 0.9 M_0 and weights
/// (50,10,10) -> (10,10,50); precisions drawn as in gen_toy, prior built
/// from the initial truth as in gen_toy with cfg.prior_mean_offset.
[[nodiscard]] GeneratedScenario gen_driving(const ScenarioConfig &cfg, Rng &rng);

struct Checkpoint {
  std::size_t step{0};
  double time_s{0.0};
  double kl_static{0.0};  ///< NaN when J > 2
  double kl_dynamic{0.0}; ///< NaN when J > 2
};

/// Final-step errors of one filter against the truth. The matched variants
/// first relabel estimated classes with match_classes, since property-only
/// data identify the mixture only up to a permutation of its classes.
struct RecoveryErrors {
  double weight_error{0.0};
  double dominant_mean_error{0.0};
  std::vector<std::size_t> matching; ///< matching[i] = estimated class standing for true class i
  double matched_weight_error{0.0};
  double matched_dominant_mean_error{0.0};
};

struct ScenarioResult {
  MapParams initial;
  MapParams truth_final;
  MapParams static_final;
  MapParams dynamic_final;
  std::vector<Checkpoint> checkpoints;
  RecoveryErrors static_errors;
  RecoveryErrors dynamic_errors;
};

/// Simulates N steps at t_k = k / rate, runs the static (delta = inf) and
/// dynamic filters side by side, and writes CSV/JSON when cfg.out_dir is set.
[[nodiscard]] ScenarioResult run_scenario(const ScenarioConfig &cfg);

/// Discrete KL(truth || estimate) between prior-predictive densities on a
/// tensor grid over [min mu - 4 sigma, max mu + 4 sigma] per axis, both
/// normalised on the grid. Requires J <= 2.
[[nodiscard]] double grid_kl(const MapParams &truth, const MapParams &estimate, std::size_t points_per_axis);

/// Assignment of estimated classes to true classes minimising the summed
/// squared distance between class means (exhaustive for K <= 8, greedy above).
[[nodiscard]] std::vector<std::size_t> match_classes(const MapParams &truth, const MapParams &estimate);

/// Mean over classes of |E[w_perm[i]] - a^t_i / a^t_0|; identity when perm is empty.
[[nodiscard]] double weight_error(const MapParams &truth, const MapParams &estimate,
                                  std::span<const std::size_t> perm = {});

/// max over dimensions of |mu_perm[i],d - mu^t_i,d| for the class i with the largest a^t.
[[nodiscard]] double dominant_mean_error(const MapParams &truth, const MapParams &estimate,
                                         std::span<const std::size_t> perm = {});

[[nodiscard]] RecoveryErrors recovery_errors(const MapParams &truth, const MapParams &estimate);

struct BenchmarkRow {
  std::size_t J{0};
  double mean_ns{0.0};
  double std_ns{0.0};
};

struct BenchmarkResult {
  std::size_t K{0};
  std::size_t reps{0};
  std::vector<BenchmarkRow> rows;
  double slope_ns{0.0};
  double intercept_ns{0.0};
  double r_squared{0.0};
};

inline constexpr std::size_t kMinBenchmarkReps = 10'000;

/// Mean wall time of bmm_property_update per J, plus an affine fit in J.
[[nodiscard]] BenchmarkResult run_benchmark(std::span<const std::size_t> j_list, std::size_t K, std::size_t n_reps,
                                            std::uint64_t seed);

/// "J,mean_ns,std_ns" rows.
[[nodiscard]] std::string benchmark_csv(const BenchmarkResult &result);

/// Header and rows used by the trajectory CSVs.
[[nodiscard]] std::string trajectory_csv_header(std::size_t K, std::size_t J);
[[nodiscard]] std::string trajectory_csv_row(std::size_t step, double time_s, const MapParams &p);

} // namespace semmap
