#include "cli.hpp"

#include "semmap/error.hpp"
#include "semmap/scenarios.hpp"
#include "semmap/verification.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cmath>
#include <fstream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace semmap::cli {

namespace {

std::string kl_text(double v) { return std::isnan(v) ? std::string("n/a") : fmt::format("{:.6g}", v); }

int simulate(const std::string &config_path, const std::string &out_dir, std::ostream &out) {
  std::ifstream in(config_path);
  if (!in)
    throw IoError(fmt::format("cannot read config '{}'", config_path));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception &e) {
    throw IoError(fmt::format("config '{}' is not valid JSON: {}", config_path, e.what()));
  }
  ScenarioConfig cfg = scenario_config_from_json(j);
  if (!out_dir.empty())
    cfg.out_dir = out_dir;
  const ScenarioResult r = run_scenario(cfg);

  fmt::print(out, "steps: {}  seed: {}\n", cfg.N, cfg.seed);
  for (const auto &[name, e] : {std::pair{"static", &r.static_errors}, std::pair{"dynamic", &r.dynamic_errors}}) {
    fmt::print(out, "{:<8} weight error {:.6g} (matched {:.6g})  dominant mean error {:.6g} (matched {:.6g})\n", name,
               e->weight_error, e->matched_weight_error, e->dominant_mean_error, e->matched_dominant_mean_error);
  }
  for (const auto &cp : r.checkpoints)
    fmt::print(out, "checkpoint k={:<8} KL static {}  dynamic {}\n", cp.step, kl_text(cp.kl_static),
               kl_text(cp.kl_dynamic));
  if (cfg.out_dir)
    fmt::print(out, "wrote {}\n", cfg.out_dir->string());
  return kExitOk;
}

int benchmark(const std::vector<std::size_t> &js, std::size_t k, std::size_t reps, std::uint64_t seed,
              const std::string &csv_path, std::ostream &out) {
  const BenchmarkResult r = run_benchmark(js, k, reps, seed);
  const std::string csv = benchmark_csv(r);
  out << csv;
  fmt::print(out, "fit: t(J) = {:.2f} + {:.2f} J ns   R^2 = {:.4f}\n", r.intercept_ns, r.slope_ns, r.r_squared);
  for (const auto &row : r.rows) {
    if (row.J == 20)
      fmt::print(out, "J=20: {:.2f} us per update\n", row.mean_ns / 1000.0);
  }
  if (!csv_path.empty()) {
    std::ofstream f(csv_path, std::ios::binary);
    f << csv;
    if (!f)
      throw IoError(fmt::format("cannot write '{}'", csv_path));
  }
  return kExitOk;
}

int verify(const std::string &suite, std::uint64_t seed, std::ostream &out) {
  const VerificationReport report = run_verification(parse_verify_suite(suite), seed);
  for (const auto &c : report.checks)
    fmt::print(out, "{} {}: {}\n", c.passed ? "PASS" : "FAIL", c.name, c.detail);
  return report.passed() ? kExitOk : kExitVerificationFailed;
}

} // namespace

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Semantic maps with Dirichlet-normal-gamma moment matching"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  auto *sim = app.add_subcommand("simulate", "Run a toy or driving scenario");
  sim->add_option("--config", config_path, "Scenario config JSON")->required();
  sim->add_option("--out", out_dir, "Output directory (overrides out_dir in the config)");

  std::vector<std::size_t> js{1, 2, 5, 10, 20};
  std::size_t reps = 100'000;
  std::size_t k = 5;
  std::uint64_t bench_seed = 1;
  std::string csv_path;
  auto *bench = app.add_subcommand("benchmark", "Time one property update as a function of J");
  bench->add_option("--j", js, "Comma-separated property dimensions")->delimiter(',');
  bench->add_option("--reps", reps, "Updates timed per J")->capture_default_str();
  bench->add_option("--k", k, "Number of classes")->capture_default_str();
  bench->add_option("--seed", bench_seed, "Seed for the random problems")->capture_default_str();
  bench->add_option("--csv", csv_path, "Also write the table to this file");

  std::string suite = "all";
  std::uint64_t verify_seed = 1;
  auto *ver = app.add_subcommand("verify", "Check the update against brute-force references");
  ver->add_option("--suite", suite, "lemma5, lemma6, bmm or all")
      ->check(CLI::IsMember({"lemma5", "lemma6", "bmm", "all"}))
      ->capture_default_str();
  ver->add_option("--seed", verify_seed, "Seed for the random instances")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sim)
      return simulate(config_path, out_dir, out);
    if (*bench)
      return benchmark(js, k, reps, bench_seed, csv_path, out);
    return verify(suite, verify_seed, out);
  } catch (const std::exception &e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitUsage;
  }
}

} // namespace semmap::cli
