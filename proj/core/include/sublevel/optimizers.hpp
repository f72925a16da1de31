#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sublevel/problems.hpp"
#include "sublevel/spectral.hpp"

namespace sublevel {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct LineSearchConfig {
  double alpha = 1e-3;
  double beta = 0.7;
  double t_init = 1.0;
  int max_backtracks = 100;
  void validate() const;
};

struct LineSearchResult {
  double t = 0.0;
  double f_new = 0.0;
  Vec x_new;
  int backtracks = 0;
};

// Largest t in {t_init beta^j} with f(x + t d) <= f(x) + alpha t g^T d.
// Trial points outside the domain count as failures of the condition.
LineSearchResult armijo(const Objective& obj, const Vec& x, double fx, const Vec& d, const Vec& g,
                        const LineSearchConfig& cfg);

enum class MethodKind { GD, AGD, Adam, Newton, CubicNewton, NewSamp, LowRankNewton, Sigma, SigmaSVD };

const char* to_string(MethodKind kind);
MethodKind method_kind_from_string(const std::string& s);

enum class StepRule { Armijo, Theoretical };
enum class EigBackend { Randomized, Dense };

struct MethodConfig {
  MethodKind kind = MethodKind::GD;
  std::string name;

  int N = 0;
  int p = 0;
  int sample_rows = 0;
  SpectrumMode mode = SpectrumMode::Convex;
  double nu = 1e-10;
  double eps_exit = 1e-10;
  double grad_tol = 0.0;
  int max_iters = 100;
  double max_seconds = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;

  double momentum = 0.5;
  double adam_lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.99;
  double adam_eps = 1e-8;
  double cubic_M0 = 1.0;

  bool fixed_subspace = false;
  StepRule step_rule = StepRule::Armijo;
  EigBackend eig_backend = EigBackend::Randomized;
  int oversample = 10;
  int power_iters = 2;
  LineSearchConfig line_search{};

  bool record_time = true;
  bool keep_iterates = false;

  void validate(int n) const;
};

struct DirectionResult {
  Vec d;
  double decrement = kNaN;
  double sigma_floor = kNaN;
};

DirectionResult newton_direction(const Objective& obj, const Vec& x, const Vec& g);
DirectionResult lowrank_newton_direction(const Objective& obj, const Vec& x, const Vec& g,
                                         const MethodConfig& cfg, std::uint64_t seed);
DirectionResult newsamp_direction(const Objective& obj, const Vec& x, const Vec& g,
                                  const MethodConfig& cfg, std::uint64_t seed);
DirectionResult sigma_direction(const Objective& obj, const Vec& x, const Vec& g,
                                const SamplingOperator& op);
DirectionResult sigmasvd_direction(const Objective& obj, const Vec& x, const Vec& g,
                                   const SamplingOperator& op, const MethodConfig& cfg,
                                   std::uint64_t seed);

// Operator used by Sigma/SigmaSVD at iteration k.
SamplingOperator iteration_operator(int n, const MethodConfig& cfg, int k, int attempt = 0);

// argmin_d g^T d + 0.5 d^T H d + (M/6) ||d||^3
Vec cubic_subproblem(const Mat& H, const Vec& g, double M);

struct MethodState {
  Vec x;
  double f = 0.0;
  Vec g;
  int k = 0;
  Vec x_prev;
  Vec m1;
  Vec m2;
  double cubic_M = 1.0;
};

MethodState initial_state(const Objective& obj, const Vec& x0, const MethodConfig& cfg);

struct StepInfo {
  double step = kNaN;
  double decrement = kNaN;
  double sigma_floor = kNaN;
  bool converged = false;
};

StepInfo step_gd(MethodState& s, const Objective& obj, const MethodConfig& cfg);
StepInfo step_agd(MethodState& s, const Objective& obj, const MethodConfig& cfg);
StepInfo step_adam(MethodState& s, const Objective& obj, const MethodConfig& cfg);
StepInfo step_newton(MethodState& s, const Objective& obj, const MethodConfig& cfg);
StepInfo step_cubic(MethodState& s, const Objective& obj, const MethodConfig& cfg);
StepInfo step_newsamp(MethodState& s, const Objective& obj, const MethodConfig& cfg);
StepInfo step_lowrank_newton(MethodState& s, const Objective& obj, const MethodConfig& cfg);
StepInfo step_sigma(MethodState& s, const Objective& obj, const MethodConfig& cfg);
StepInfo step_sigmasvd(MethodState& s, const Objective& obj, const MethodConfig& cfg);
StepInfo step(MethodState& s, const Objective& obj, const MethodConfig& cfg);

enum class RunStatus { Converged, MaxIters, LineSearchFailed, DomainError, NumericalError };

const char* to_string(RunStatus s);
RunStatus run_status_from_string(const std::string& s);

// Record k describes x_k and the step taken from it (NaN when no step was taken).
struct IterationRecord {
  int k = 0;
  double f = 0.0;
  double grad_norm = 0.0;
  double decrement = kNaN;
  double step = kNaN;
  double sigma_floor = kNaN;
  double elapsed_s = 0.0;
};

struct IterationTrace {
  std::vector<IterationRecord> records;
  RunStatus status = RunStatus::MaxIters;
  std::string message;
  std::vector<Vec> iterates;
};

IterationTrace run(const Objective& obj, const Vec& x0, const MethodConfig& cfg);

}  // namespace sublevel
