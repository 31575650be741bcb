#include "cli.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using semmap::cli::kExitOk;
using semmap::cli::kExitUsage;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "semmap_cli");
  std::vector<const char *> argv;
  for (const auto &a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = semmap::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path write_config(const std::string &name, const nlohmann::json &j) {
  const fs::path p = fs::temp_directory_path() / ("semmap_cli_" + name + ".json");
  std::ofstream(p) << j.dump();
  return p;
}

int shell_exit(const std::string &cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(invoke({}).code, kExitUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(invoke({"simulate"}).code, kExitUsage);
  EXPECT_EQ(invoke({"verify", "--suite", "lemma7"}).code, kExitUsage);
  EXPECT_EQ(invoke({"benchmark", "--reps", "10"}).code, kExitUsage);
  EXPECT_EQ(invoke({"benchmark", "--j", "1,x"}).code, kExitUsage);
}

TEST(Cli, HelpSucceeds) {
  const Outcome o = invoke({"--help"});
  EXPECT_EQ(o.code, kExitOk);
  EXPECT_NE(o.out.find("simulate"), std::string::npos);
}

TEST(Cli, ConfigProblemsAreIoOrUsageErrors) {
  EXPECT_EQ(invoke({"simulate", "--config", "/nonexistent/config.json"}).code, kExitUsage);
  const fs::path bad = fs::temp_directory_path() / "semmap_cli_bad.json";
  std::ofstream(bad) << "{ not json";
  const Outcome o = invoke({"simulate", "--config", bad.string()});
  EXPECT_EQ(o.code, kExitUsage);
  EXPECT_NE(o.err.find("not valid JSON"), std::string::npos);
  const fs::path invalid = write_config("invalid", {{"kind", "toy_static"}, {"N", 0}});
  EXPECT_EQ(invoke({"simulate", "--config", invalid.string()}).code, kExitUsage);
}

TEST(Cli, SimulateWritesOutputs) {
  const fs::path out = fs::temp_directory_path() / "semmap_cli_sim";
  fs::remove_all(out);
  const fs::path cfg =
      write_config("sim", {{"kind", "driving_time_varying"}, {"N", 200}, {"seed", 4}, {"kl_grid_points", 30}});
  const Outcome o = invoke({"simulate", "--config", cfg.string(), "--out", out.string()});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  EXPECT_NE(o.out.find("checkpoint k=200"), std::string::npos);
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
  EXPECT_TRUE(fs::exists(out / "dynamic.csv"));
  fs::remove_all(out);
}

TEST(Cli, BenchmarkPrintsTable) {
  const Outcome o = invoke({"benchmark", "--j", "1,3", "--reps", "10000", "--k", "2"});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  EXPECT_EQ(o.out.rfind("J,mean_ns,std_ns\n1,", 0), 0u);
  EXPECT_NE(o.out.find("R^2"), std::string::npos);
}

TEST(Cli, VerifySuitePasses) {
  const Outcome o = invoke({"verify", "--suite", "lemma5"});
  EXPECT_EQ(o.code, kExitOk);
  EXPECT_EQ(o.out.rfind("PASS", 0), 0u);
}

TEST(Cli, ExecutableExitCodes) {
  const std::string exe = SEMMAP_CLI_PATH;
  EXPECT_EQ(shell_exit(exe + " verify --suite lemma5"), 0);
  EXPECT_EQ(shell_exit(exe + " verify --suite nope"), 1);
  EXPECT_EQ(shell_exit(exe + " simulate --config /nonexistent.json"), 1);
  EXPECT_EQ(shell_exit(exe), 1);
}
