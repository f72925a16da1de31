#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "sublevel/error.hpp"
#include "sublevel/experiment.hpp"

using namespace sublevel;
namespace fs = std::filesystem;

namespace {

const char* kBase = R"([experiment]
seed = 5
name = unit

[problem]
kind = logistic
data = synthetic
m = 120
n = 12
l2 = 1e-3

[budget]
max_iters = 6

[output]
timing = off

[method.gd]
type = gd

[method.ssvd]
type = sigmasvd
N = 0.5n
p = 3
)";

fs::path scratch(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("sublevel_cli_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "exp.ini";
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

ErrorCode config_code(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidMatrix;
}

}  // namespace

TEST(Dimension, Rounding) {
  EXPECT_EQ(parse_dimension("0.46n").resolve(500), 230);
  EXPECT_EQ(parse_dimension("0.5n").resolve(5), 3);  // 2.5 rounds up
  EXPECT_EQ(parse_dimension("0.25n").resolve(10), 3);
  EXPECT_EQ(parse_dimension("n").resolve(17), 17);
  EXPECT_EQ(parse_dimension("n-1").resolve(17), 16);
  EXPECT_EQ(parse_dimension("42").resolve(100), 42);
  EXPECT_EQ(parse_dimension("0.3m").base, 'm');
  EXPECT_THROW(parse_dimension("abc"), Error);
  EXPECT_THROW(parse_dimension("-3"), Error);
}

TEST(Config, ParsesMethods) {
  const ExperimentConfig c = parse_config(kBase);
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.problem.m, 120);
  ASSERT_EQ(c.methods.size(), 2u);
  EXPECT_EQ(c.methods[1].cfg.kind, MethodKind::SigmaSVD);
  EXPECT_EQ(c.methods[1].N->resolve(12), 6);
  EXPECT_FALSE(c.output.timing);
  EXPECT_EQ(c.source_text, kBase);
}

TEST(Config, Rejections) {
  EXPECT_EQ(config_code(std::string(kBase) + "\n[method.x]\ntype = gd\nfoo = 1\n"), ErrorCode::ConfigError);
  EXPECT_EQ(config_code(std::string(kBase) + "\n[method.x]\ntype = nope\n"), ErrorCode::ConfigError);
  EXPECT_EQ(config_code(std::string(kBase) + "\n[bogus]\na = 1\n"), ErrorCode::ConfigError);
  EXPECT_EQ(config_code(std::string(kBase) + "\n[method.y]\ntype = sigmasvd\nN = 4\n"), ErrorCode::ConfigError);
  EXPECT_EQ(config_code("[problem\nkind = logistic\n"), ErrorCode::ConfigError);
}

TEST(Config, MethodResolution) {
  const ExperimentConfig c = parse_config(kBase);
  const MethodConfig a = resolve_method(c, c.methods[1], 12, 1);
  const MethodConfig b = resolve_method(c, c.methods[1], 12, 1);
  EXPECT_EQ(a.N, 6);
  EXPECT_EQ(a.p, 3);
  EXPECT_EQ(a.max_iters, 6);
  EXPECT_EQ(a.seed, b.seed);
  EXPECT_NE(a.seed, resolve_method(c, c.methods[0], 12, 0).seed);
}

TEST(Cli, RunWritesArtifacts) {
  const fs::path dir = scratch("run");
  CommandOptions o;
  o.config_path = write_config(dir, kBase).string();
  o.out_dir = (dir / "out").string();
  std::ostringstream out, err;
  ASSERT_EQ(cmd_run(o, out, err), kExitOk) << err.str();
  for (const char* f : {"config.ini", "gd.csv", "gd.json", "ssvd.csv", "ssvd.json", "convergence.svg"})
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  EXPECT_EQ(slurp(dir / "out" / "config.ini"), kBase);
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "ssvd.json"));
  EXPECT_EQ(j["method"], "ssvd");
}

TEST(Cli, ZeroIterationBudget) {
  const fs::path dir = scratch("zero");
  std::string text = kBase;
  text.replace(text.find("max_iters = 6"), 13, "max_iters = 0");
  CommandOptions o;
  o.config_path = write_config(dir, text).string();
  o.out_dir = (dir / "out").string();
  std::ostringstream out, err;
  ASSERT_EQ(cmd_run(o, out, err), kExitOk) << err.str();
  const std::string csv = slurp(dir / "out" / "gd.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("codes");
  std::ostringstream out, err;
  CommandOptions o;
  o.config_path = write_config(dir, std::string(kBase) + "\n[method.bad]\ntype = gd\nzzz = 1\n").string();
  o.out_dir = (dir / "out").string();
  EXPECT_EQ(cmd_run(o, out, err), kExitConfigError);
  o.config_path = (dir / "missing.ini").string();
  EXPECT_EQ(cmd_run(o, out, err), kExitConfigError);

  std::string text = kBase;
  text.replace(text.find("data = synthetic"), 16, "data = libsvm\npath = " + (dir / "nothere.svm").string());
  o.config_path = write_config(dir, text).string();
  EXPECT_EQ(cmd_run(o, out, err), kExitRuntimeError);
  o.config_path = write_config(dir, kBase).string();
  EXPECT_EQ(cmd_escape(o, out, err), kExitConfigError);  // no [escape] section
}

TEST(Cli, SeedOverrideChangesOutput) {
  const fs::path dir = scratch("seed");
  CommandOptions o;
  o.config_path = write_config(dir, kBase).string();
  std::ostringstream out, err;
  o.out_dir = (dir / "a").string();
  ASSERT_EQ(cmd_run(o, out, err), kExitOk);
  o.out_dir = (dir / "b").string();
  ASSERT_EQ(cmd_run(o, out, err), kExitOk);
  o.seed = 6;
  o.out_dir = (dir / "c").string();
  ASSERT_EQ(cmd_run(o, out, err), kExitOk);
  EXPECT_EQ(slurp(dir / "a" / "ssvd.csv"), slurp(dir / "b" / "ssvd.csv"));
  EXPECT_NE(slurp(dir / "a" / "ssvd.csv"), slurp(dir / "c" / "ssvd.csv"));
}

TEST(Cli, EscapeSingleTrial) {
  const fs::path dir = scratch("escape");
  const std::string text = R"([experiment]
seed = 3

[problem]
kind = nls
distribution = saddle_plateau
m = 150
n = 30

[output]
timing = off

[method.ssvd]
type = sigmasvd
mode = nonconvex
N = 10
p = 3
epsilon = 1e-3

[method.gd]
type = gd

[escape]
trials = 1
sweep = N
values = 0.2n, 0.4n
method = ssvd
baselines = gd
max_iters = 20
reference_iters = 30
)";
  CommandOptions o;
  o.config_path = write_config(dir, text).string();
  o.out_dir = (dir / "out").string();
  o.threads = 2;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_escape(o, out, err), kExitOk) << err.str();
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "escape.json"));
  ASSERT_EQ(j["rows"].size(), 3u);
  for (const auto& r : j["rows"]) {
    const double prob = r["probability"];
    EXPECT_TRUE(prob == 0.0 || prob == 1.0);
  }
  const std::string csv = slurp(dir / "out" / "escape.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "method,sweep_value,N,p,trials,successes,probability");
}

TEST(Cli, VerifyJson) {
  VerifyOptions v;
  v.json = true;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_verify(v, out, err), kExitOk);
  const auto j = nlohmann::json::parse(out.str());
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_GE(j["probes"].size(), 5u);
  v.inject_floor_fault = true;
  std::ostringstream out2;
  EXPECT_EQ(cmd_verify(v, out2, err), kExitVerifyFailed);
}
