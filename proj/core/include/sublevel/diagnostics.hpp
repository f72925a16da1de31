#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sublevel/optimizers.hpp"
#include "sublevel/problems.hpp"
#include "sublevel/spectral.hpp"

namespace sublevel {

double newton_decrement(const Objective& obj, const Vec& x);

struct DecrementReport {
  double lambda = 0.0;        // exact Newton
  double lambda_bar = 0.0;    // full-space floored inverse at rank N
  double lambda_tilde = 0.0;  // exact Galerkin inverse
  double lambda_hat = 0.0;    // floored Galerkin inverse at rank p
  double e_hat = 0.0;
  double ratio_coarse = 1.0;  // sigma_N / sigma_{p+1} of the reduced Hessian
  double ratio_full = 1.0;    // sigma_n / sigma_{N+1} of the full Hessian
};

DecrementReport approx_decrements(const Objective& obj, const Vec& x, const SamplingOperator& op,
                                  const TruncatedSpectrum& coarse_spectrum);

struct LemmaCheck {
  DecrementReport decrements;
  double cross = 0.0;       // d^T H d_hat, should equal lambda_hat^2
  double hat_energy = 0.0;  // d_hat^T H d_hat, bounded by lambda_hat^2
  double distance = 0.0;    // ||H^{1/2}(d - d_hat)||, bounded by e_hat
  bool identity = true;
  bool bound = true;
  bool distance_bound = true;
  bool chain = true;
  bool full_chain = true;
  std::string violation;
  bool holds() const { return identity && bound && distance_bound && chain && full_chain; }
};

LemmaCheck lemma1_check(const Objective& obj, const Vec& x, const SamplingOperator& op,
                        const TruncatedSpectrum& coarse_spectrum, double rel_slack = 1e-9);

double omega(double x);
double omega_star(double x);

struct SuboptimalityBounds {
  double lambda = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double gap = 0.0;
  bool holds = true;
  bool quadratic_applicable = false;
  bool quadratic_holds = true;
};

SuboptimalityBounds suboptimality_bounds(const Objective& obj, const Vec& x, double f_star,
                                         double slack = 1e-8);

double eta_full(double eps);
double eta_coarse(double eps_hat);

enum class PhaseVariant { FullSpace, Coarse };

struct PhaseReport {
  PhaseVariant variant = PhaseVariant::FullSpace;
  double eps = 1.0;
  double eta = 0.0;
  int entry = -1;
  bool unit_steps = true;
  bool strictly_decreasing = true;
  std::vector<double> ratios;
  double quadratic_constant = 0.0;
  std::string violation;
  bool entered() const { return entry >= 0; }
  bool holds() const { return unit_steps && strictly_decreasing; }
};

// lambda[k], step[k] per iterate (step NaN when none taken). ratio_stream holds
// sigma_n/sigma_{N+1} (FullSpace) or lambda_hat/lambda (Coarse) per iterate.
PhaseReport phase_report(const std::vector<double>& lambda, const std::vector<double>& step,
                         const std::vector<double>& ratio_stream, PhaseVariant variant);

// Recomputes exact decrements and ratio streams along a trace with kept iterates.
PhaseReport analyze_phase(const Objective& obj, const IterationTrace& trace,
                          const MethodConfig& cfg);

std::vector<double> trace_newton_decrements(const Objective& obj, const IterationTrace& trace);

struct ReferenceResult {
  double f_star = 0.0;
  Vec x_star;
  IterationTrace trace;
};

ReferenceResult reference_minimum(const Objective& obj, const Vec& x0,
                                  MethodKind kind = MethodKind::Newton, int iters = 200,
                                  double grad_tol = 1e-14);

double escape_threshold(double f_saddle, double f_min);

struct EscapeOutcome {
  int trials = 0;
  int successes = 0;
  double probability = 0.0;
  std::vector<double> best_f;
};

EscapeOutcome escape_rate(const Objective& obj, const Vec& x0, const MethodConfig& base,
                          int trials, std::uint64_t master_seed, double threshold,
                          int threads = 1);

// Two-sided 95% test for equality of two binomial proportions.
bool proportions_consistent(int k1, int n1, int k2, int n2);

struct DegeneracyReport {
  double sigmasvd_vs_newton = 0.0;
  double lowrank_vs_newton = 0.0;
  double sigmasvd_vs_lowrank = 0.0;
  bool holds(double tol = 1e-8) const {
    return sigmasvd_vs_newton <= tol && lowrank_vs_newton <= tol && sigmasvd_vs_lowrank <= tol;
  }
};

DegeneracyReport degeneracy_chain(const Objective& obj, const Vec& x);

}  // namespace sublevel
