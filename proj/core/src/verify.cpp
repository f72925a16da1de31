#include <cmath>
#include <ostream>
#include <optional>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "sublevel/diagnostics.hpp"
#include "sublevel/error.hpp"
#include "sublevel/experiment.hpp"
#include "sublevel/rng.hpp"

namespace sublevel {

namespace {

GlmObjective logistic_problem(int m, int n, std::uint64_t seed, double l2) {
  SyntheticSpec s;
  s.m = m;
  s.n = n;
  s.seed = seed;
  s.labels_for = ProblemKind::Logistic;
  SyntheticData d = generate_synthetic(s);
  return GlmObjective(ProblemKind::Logistic, std::move(d.A), std::move(d.b), l2);
}

GlmObjective loglinear_problem(int m, int n, std::uint64_t seed) {
  SyntheticSpec s;
  s.m = m;
  s.n = n;
  s.seed = seed;
  s.distribution = Distribution::LogLinearFeasible;
  s.labels_for = ProblemKind::LogLinear;
  SyntheticData d = generate_synthetic(s);
  return GlmObjective(ProblemKind::LogLinear, std::move(d.A), std::move(d.b));
}

Vec random_point(int n, std::uint64_t seed, double scale) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, scale);
  Vec x(n);
  for (int j = 0; j < n; ++j) x(j) = normal(gen);
  return x;
}

ProbeResult lemma_probe(const VerifyOptions& opts) {
  ProbeResult r{"lemma1_chain", true, "", 0};
  for (int c = 0; c < 20; ++c) {
    const std::uint64_t s = trial_seed(opts.seed, c);
    const int n = 30 + 2 * (c % 5);
    const GlmObjective obj = logistic_problem(6 * n, n, s, 1e-3);
    const Vec x = random_point(n, s ^ 0x55, 0.5);
    const int N = 10 + c % 12;
    const int p = 1 + c % (N - 1);
    const SamplingOperator op = SamplingOperator::sample(n, N, s ^ 0x77);
    TruncatedSpectrum spec = dense_tsvd(obj.reduced_hessian(x, op), p, SpectrumMode::Convex);
    if (opts.inject_floor_fault)
      spec = TruncatedSpectrum(spec.vectors(), spec.values(), 0.5 * spec.floor(), spec.mode(),
                               spec.nu());
    const LemmaCheck chk = lemma1_check(obj, x, op, spec);
    ++r.cases;
    if (!chk.holds() && r.passed) {
      r.passed = false;
      r.detail = fmt::format("case {} (n={}, N={}, p={}): {}", c, n, N, p, chk.violation);
    }
  }
  return r;
}

struct LoglinearTrace {
  GlmObjective obj;
  MethodConfig cfg;
  IterationTrace trace;
  double f_star;
};

LoglinearTrace loglinear_trace(const VerifyOptions& opts) {
  GlmObjective obj = loglinear_problem(400, 40, opts.seed);
  const Vec x0 = Vec::Zero(40);
  MethodConfig cfg;
  cfg.kind = MethodKind::LowRankNewton;
  cfg.name = "lowrank_newton";
  cfg.N = 30;
  cfg.eig_backend = EigBackend::Dense;
  cfg.max_iters = 100;
  cfg.grad_tol = 1e-10;
  cfg.eps_exit = 1e-24;
  cfg.seed = opts.seed;
  cfg.record_time = false;
  cfg.keep_iterates = true;
  IterationTrace t = run(obj, x0, cfg);
  const double f_star = reference_minimum(obj, x0).f_star;
  return {std::move(obj), cfg, std::move(t), f_star};
}

ProbeResult sandwich_probe(const LoglinearTrace& lt) {
  ProbeResult r{"suboptimality_sandwich", true, "", 0};
  for (std::size_t k = 0; k < lt.trace.iterates.size(); ++k) {
    const Vec& x = lt.trace.iterates[k];
    const double lam = newton_decrement(lt.obj, x);
    if (!(lam < 1.0)) continue;
    const SuboptimalityBounds b = suboptimality_bounds(lt.obj, x, lt.f_star);
    ++r.cases;
    if ((!b.holds || !b.quadratic_holds) && r.passed) {
      r.passed = false;
      r.detail = fmt::format("k={}: omega({:.17g})={:.17g} <= f-f*={:.17g} <= omega*={:.17g}", k,
                             b.lambda, b.lower, b.gap, b.upper);
      if (!b.quadratic_holds) r.detail += fmt::format("; f-f* > lambda^2={:.17g}", b.lambda * b.lambda);
    }
  }
  return r;
}

ProbeResult phase_probe(const LoglinearTrace& lt) {
  ProbeResult r{"phase_report", true, "", 1};
  const PhaseReport rep = analyze_phase(lt.obj, lt.trace, lt.cfg);
  if (!rep.entered()) {
    r.detail = fmt::format("region lambda <= {:.6f} never entered", rep.eta);
    return r;
  }
  r.detail = fmt::format("entered at k={} (eta={:.6f}, eps={:.6f})", rep.entry, rep.eta, rep.eps);
  if (!rep.holds()) {
    r.passed = false;
    r.detail += ": " + rep.violation;
  }
  return r;
}

ProbeResult unit_step_probe(const LoglinearTrace& lt) {
  ProbeResult r{"unit_step", true, "", 0};
  const double alpha = lt.cfg.line_search.alpha;
  const double cutoff = (1.0 - 2.0 * alpha) / 2.0;
  for (const IterationRecord& rec : lt.trace.records) {
    if (!std::isfinite(rec.step) || !(rec.decrement <= cutoff)) continue;
    ++r.cases;
    if (rec.step != 1.0 && r.passed) {
      r.passed = false;
      r.detail = fmt::format("k={}: decrement {:.17g} <= {:.6f} but step {:.17g}", rec.k,
                             rec.decrement, cutoff, rec.step);
    }
  }
  return r;
}

ProbeResult degeneracy_probe(const VerifyOptions& opts) {
  ProbeResult r{"degeneracy_chain", true, "", 0};
  for (int c = 0; c < 3; ++c) {
    const std::uint64_t s = trial_seed(opts.seed ^ 0xDE6, c);
    const GlmObjective obj = logistic_problem(200, 40, s, 1e-3);
    const DegeneracyReport d = degeneracy_chain(obj, random_point(40, s, 0.3));
    ++r.cases;
    if (!d.holds() && r.passed) {
      r.passed = false;
      r.detail = fmt::format("case {}: sigmasvd/newton {:.3e}, lowrank/newton {:.3e}, "
                             "sigmasvd/lowrank {:.3e} > 1e-8",
                             c, d.sigmasvd_vs_newton, d.lowrank_vs_newton, d.sigmasvd_vs_lowrank);
    }
  }
  return r;
}

}  // namespace

std::vector<ProbeResult> run_verify_probes(const VerifyOptions& opts) {
  std::vector<ProbeResult> out;
  auto guarded = [&](const std::string& name, auto&& fn) {
    try {
      out.push_back(fn());
    } catch (const std::exception& e) {
      out.push_back(ProbeResult{name, false, std::string("error: ") + e.what(), 0});
    }
  };
  guarded("lemma1_chain", [&] { return lemma_probe(opts); });
  std::optional<LoglinearTrace> lt;
  try {
    lt.emplace(loglinear_trace(opts));
  } catch (const std::exception& e) {
    for (const char* name : {"suboptimality_sandwich", "phase_report", "unit_step"})
      out.push_back(ProbeResult{name, false, std::string("error: ") + e.what(), 0});
  }
  if (lt) {
    guarded("suboptimality_sandwich", [&] { return sandwich_probe(*lt); });
    guarded("phase_report", [&] { return phase_probe(*lt); });
    guarded("unit_step", [&] { return unit_step_probe(*lt); });
  }
  guarded("degeneracy_chain", [&] { return degeneracy_probe(opts); });
  return out;
}

int cmd_verify(const VerifyOptions& opts, std::ostream& out, std::ostream& err) {
  std::vector<ProbeResult> probes;
  try {
    probes = run_verify_probes(opts);
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  bool ok = true;
  for (const ProbeResult& p : probes) ok = ok && p.passed;
  if (opts.json) {
    nlohmann::json arr = nlohmann::json::array();
    for (const ProbeResult& p : probes)
      arr.push_back({{"name", p.name}, {"passed", p.passed}, {"cases", p.cases}, {"detail", p.detail}});
    out << nlohmann::json{{"schema", kSchema}, {"passed", ok}, {"probes", arr}}.dump(2) << "\n";
  } else {
    for (const ProbeResult& p : probes) {
      out << (p.passed ? "PASS " : "FAIL ") << p.name << " (" << p.cases << " cases)";
      if (!p.detail.empty()) out << ": " << p.detail;
      out << "\n";
    }
  }
  if (!ok) {
    for (const ProbeResult& p : probes)
      if (!p.passed) err << "probe failed: " << p.name << "\n";
    return kExitVerifyFailed;
  }
  return kExitOk;
}

}  // namespace sublevel
