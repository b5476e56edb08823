#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "magg/cli.hpp"
#include "magg/io.hpp"

namespace {

using namespace magg;
namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome dispatch(std::vector<std::string> args) {
  args.insert(args.begin(), "magg");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("magg_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Shipped config with a shorter horizon, written next to the outputs.
fs::path shortened(const std::string& name, const fs::path& dir, double t_end) {
  SimConfig c = load_config(fs::path(MAGG_CONFIG_DIR) / name);
  c.t_end = t_end;
  const fs::path p = dir / "config.json";
  write_text(p, serialize_config(c));
  return p;
}

TEST(Cli, NoArgumentsPrintsUsage) {
  const Outcome o = dispatch({});
  EXPECT_EQ(o.code, 1);
  EXPECT_NE((o.out + o.err).find("run"), std::string::npos);
}

TEST(Cli, UnknownSubcommandFails) {
  const Outcome o = dispatch({"frobnicate"});
  EXPECT_EQ(o.code, 1);
  EXPECT_NE((o.out + o.err).find("sweep-etar"), std::string::npos);
}

TEST(Cli, MissingConfigFails) {
  const fs::path dir = scratch("missing");
  EXPECT_EQ(dispatch({"run", "--config", (dir / "nope.json").string(), "--out", dir.string()}).code, 1);
  fs::remove_all(dir);
}

TEST(Cli, InvalidConfigFails) {
  const fs::path dir = scratch("invalid");
  write_text(dir / "bad.json", R"({"grid": {"n": 32}, "params": {"viscocity": 1}, "dt": 1e-3, "t_end": 0.1})");
  const Outcome o = dispatch({"run", "--config", (dir / "bad.json").string(), "--out", dir.string()});
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("viscocity"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, RunWritesLedgerAndSnapshots) {
  const fs::path dir = scratch("run");
  const fs::path cfg = shortened("demo_quartic.json", dir, 0.02);
  const fs::path out = dir / "out";
  const Outcome o = dispatch({"run", "--config", cfg.string(), "--out", out.string()});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_TRUE(fs::exists(out / "ledger.csv"));
  EXPECT_TRUE(fs::exists(out / "snapshot_final.bin"));
  fs::remove_all(dir);
}

TEST(Cli, SweepWritesReportWithSlope) {
  const fs::path dir = scratch("sweep");
  const fs::path cfg = shortened("etar_sweep.json", dir, 0.02);
  const Outcome o =
      dispatch({"sweep-etar", "--config", cfg.string(), "--values", "0.1,0.01,0.001,0.0001", "--out", dir.string()});
  ASSERT_EQ(o.code, 0) << o.err;
  std::ifstream in(dir / "sweep_report.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_TRUE(j.at("fitted_slope").is_number());
  EXPECT_EQ(j.at("errors").size(), 4u);
  EXPECT_EQ(j.at("config_digest").get<std::string>().size(), 64u);
  fs::remove_all(dir);
}

TEST(Cli, SweepRejectsIncreasingValues) {
  const fs::path dir = scratch("sweep_bad");
  const fs::path cfg = shortened("etar_sweep.json", dir, 0.01);
  EXPECT_EQ(dispatch({"sweep-etar", "--config", cfg.string(), "--values", "0.01,0.1", "--out", dir.string()}).code, 1);
  fs::remove_all(dir);
}

TEST(Cli, BinaryExitCodes) {
  const std::string exe = MAGG_CLI_PATH;
  EXPECT_EQ(WEXITSTATUS(std::system((exe + " > /dev/null 2>&1").c_str())), 1);
  EXPECT_EQ(WEXITSTATUS(std::system((exe + " --help > /dev/null 2>&1").c_str())), 0);
  EXPECT_EQ(WEXITSTATUS(std::system((exe + " run --config /nonexistent.json --out /tmp/x > /dev/null 2>&1").c_str())),
            1);
}

}  // namespace
