#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sublevel/dataio.hpp"
#include "sublevel/optimizers.hpp"
#include "sublevel/problems.hpp"

namespace sublevel {

// A size written as an integer, a fraction of n ("0.46n"), "n" or "n-<k>".
// Row counts may use m in place of n.
struct DimensionExpr {
  std::string text;
  long long numerator = 0;    // fraction = numerator / denominator when relative
  long long denominator = 1;
  long long offset = 0;
  bool relative = false;
  char base = 'n';
  int resolve(int size) const;  // rounded to nearest, ties up
};

DimensionExpr parse_dimension(const std::string& text);

struct ProblemConfig {
  ProblemKind kind = ProblemKind::Logistic;
  std::string data = "synthetic";
  std::string path;
  Distribution distribution = Distribution::GaussianFeatures;
  int m = 100;
  int n = 10;
  std::optional<std::uint64_t> seed;
  double l2 = 0.0;
  std::optional<bool> standardize;  // defaults to on for files, off for synthetic data
  double b_low = 1.0;
  double b_high = 2.0;
  int key_coordinates = 8;
  std::size_t dense_cap = 2000;
};

enum class StartPolicy { Zero, Gaussian };

struct StartConfig {
  StartPolicy policy = StartPolicy::Zero;
  std::optional<std::uint64_t> seed;
};

struct BudgetConfig {
  int max_iters = 100;
  double max_seconds = 0.0;  // 0 means unlimited
};

struct OutputConfig {
  std::string dir;
  PlotAxes axes;
  bool timing = true;
};

struct MethodEntry {
  std::string name;
  MethodConfig cfg;
  std::optional<DimensionExpr> N;
  std::optional<DimensionExpr> p;
  std::optional<DimensionExpr> rows;
  bool explicit_seed = false;
  bool explicit_max_iters = false;
};

struct EscapeConfig {
  bool present = false;
  int trials = 50;
  std::string sweep = "N";
  std::vector<DimensionExpr> values;
  std::string method;
  std::vector<std::string> baselines;
  int max_iters = 500;
  std::optional<double> threshold;
  int reference_iters = 200;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string name = "experiment";
  ProblemConfig problem;
  StartConfig start;
  BudgetConfig budget;
  OutputConfig output;
  std::vector<MethodEntry> methods;
  EscapeConfig escape;
  std::string source_text;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

struct ProblemInstance {
  std::unique_ptr<Objective> objective;
  Vec x0;
  std::string description;
};

ProblemInstance build_problem(const ExperimentConfig& cfg);
MethodConfig resolve_method(const ExperimentConfig& cfg, const MethodEntry& entry, int n,
                            std::size_t index);

struct CommandOptions {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool json = false;
};

inline constexpr const char* kOutputDirEnv = "SUBLEVEL_OUTPUT_DIR";

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeError = 3;

int cmd_run(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_escape(const CommandOptions& opts, std::ostream& out, std::ostream& err);

struct VerifyOptions {
  bool json = false;
  // Negative control: scales the coarse floor below sigma_{p+1}.
  bool inject_floor_fault = false;
  std::uint64_t seed = 2024;
};

struct ProbeResult {
  std::string name;
  bool passed = true;
  std::string detail;
  int cases = 0;
};

std::vector<ProbeResult> run_verify_probes(const VerifyOptions& opts);
int cmd_verify(const VerifyOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace sublevel
