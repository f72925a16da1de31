#include "sublevel/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "sublevel/error.hpp"
#include "sublevel/rng.hpp"

namespace sublevel {

namespace {

double quad_form_inverse(const Eigen::LLT<Mat>& llt, const Vec& g) { return g.dot(llt.solve(g)); }

Eigen::LLT<Mat> factor_pd(const Mat& H, const char* what) {
  Eigen::LLT<Mat> llt(H);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, what);
  return llt;
}

double safe_sqrt(double q) { return std::sqrt(std::max(0.0, q)); }

std::string fmt_pair(const char* lhs, double a, const char* op, const char* rhs, double b) {
  std::ostringstream os;
  os.precision(17);
  os << lhs << " = " << a << " " << op << " " << rhs << " = " << b;
  return os.str();
}

}  // namespace

double newton_decrement(const Objective& obj, const Vec& x) {
  const Vec g = obj.gradient(x);
  return safe_sqrt(quad_form_inverse(factor_pd(obj.dense_hessian(x), "Hessian not positive definite"), g));
}

DecrementReport approx_decrements(const Objective& obj, const Vec& x, const SamplingOperator& op,
                                  const TruncatedSpectrum& coarse_spectrum) {
  const Vec g = obj.gradient(x);
  const Mat H = obj.dense_hessian(x);
  const Vec rg = op.restrict(g);
  const Mat Hr = obj.reduced_hessian(x, op);

  DecrementReport r;
  r.lambda = safe_sqrt(quad_form_inverse(factor_pd(H, "Hessian not positive definite"), g));
  r.lambda_tilde =
      safe_sqrt(quad_form_inverse(factor_pd(Hr, "reduced Hessian not positive definite"), rg));
  r.lambda_hat = safe_sqrt(rg.dot(coarse_spectrum.apply_inverse(rg)));
  const double sigma_N = dense_symmetric_eig(Hr).values.minCoeff();
  r.ratio_coarse = sigma_N / coarse_spectrum.floor();

  const int n = obj.dim();
  const int N = op.coarse_dim();
  if (N < n) {
    const Eigenpairs full = dense_symmetric_eig(H);
    const TruncatedSpectrum bar = floor_spectrum(full, N, SpectrumMode::Convex);
    r.lambda_bar = safe_sqrt(g.dot(bar.apply_inverse(g)));
    r.ratio_full = full.values[n - 1] / full.values[N];
  } else {
    r.lambda_bar = r.lambda;
    r.ratio_full = 1.0;
  }
  const double lam_hat = std::min(r.lambda_hat, r.lambda * (1.0 + 1e-10));
  r.e_hat = safe_sqrt(r.lambda * r.lambda - lam_hat * lam_hat);
  return r;
}

LemmaCheck lemma1_check(const Objective& obj, const Vec& x, const SamplingOperator& op,
                        const TruncatedSpectrum& coarse_spectrum, double rel_slack) {
  LemmaCheck c;
  c.decrements = approx_decrements(obj, x, op, coarse_spectrum);
  const DecrementReport& r = c.decrements;
  const Vec g = obj.gradient(x);
  const Mat H = obj.dense_hessian(x);
  const Eigen::LLT<Mat> llt = factor_pd(H, "Hessian not positive definite");
  const Vec d = -llt.solve(g);
  const Vec d_hat = -LowRankInverse(coarse_spectrum, op).apply(g);

  const Eigenpairs e = dense_symmetric_eig(H);
  const Mat root = e.vectors * e.values.cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                   e.vectors.transpose();

  const double lh2 = r.lambda_hat * r.lambda_hat;
  c.cross = d.dot(H * d_hat);
  c.hat_energy = d_hat.dot(H * d_hat);
  c.distance = (root * (d - d_hat)).norm();

  const double s1 = rel_slack * std::max(r.lambda, 1e-300);
  const double s2 = s1 * std::max(r.lambda, 1e-300);
  std::vector<std::string> bad;
  c.identity = std::abs(c.cross - lh2) <= s2;
  if (!c.identity) bad.push_back(fmt_pair("d^T H d_hat", c.cross, "!=", "lambda_hat^2", lh2));
  c.bound = c.hat_energy <= lh2 + s2;
  if (!c.bound) bad.push_back(fmt_pair("d_hat^T H d_hat", c.hat_energy, ">", "lambda_hat^2", lh2));
  c.distance_bound = c.distance <= r.e_hat + s1;
  if (!c.distance_bound)
    bad.push_back(fmt_pair("||H^(1/2)(d - d_hat)||", c.distance, ">", "e_hat", r.e_hat));

  const double lower = std::sqrt(std::max(0.0, r.ratio_coarse)) * r.lambda_tilde;
  const bool c1 = lower <= r.lambda_hat + s1;
  const bool c2 = r.lambda_hat <= r.lambda_tilde + s1;
  const bool c3 = r.lambda_tilde <= r.lambda + s1;
  c.chain = c1 && c2 && c3;
  if (!c1) bad.push_back(fmt_pair("sqrt(sigma_N/sigma_p+1) lambda_tilde", lower, ">", "lambda_hat", r.lambda_hat));
  if (!c2) bad.push_back(fmt_pair("lambda_hat", r.lambda_hat, ">", "lambda_tilde", r.lambda_tilde));
  if (!c3) bad.push_back(fmt_pair("lambda_tilde", r.lambda_tilde, ">", "lambda", r.lambda));

  const double full_lower = std::sqrt(std::max(0.0, r.ratio_full)) * r.lambda;
  const bool f1 = full_lower <= r.lambda_bar + s1;
  const bool f2 = r.lambda_bar <= r.lambda + s1;
  c.full_chain = f1 && f2;
  if (!f1) bad.push_back(fmt_pair("sqrt(sigma_n/sigma_N+1) lambda", full_lower, ">", "lambda_bar", r.lambda_bar));
  if (!f2) bad.push_back(fmt_pair("lambda_bar", r.lambda_bar, ">", "lambda", r.lambda));

  for (std::size_t i = 0; i < bad.size(); ++i) c.violation += (i ? "; " : "") + bad[i];
  return c;
}

double omega(double x) {
  if (!(x >= 0.0)) throw Error(ErrorCode::DomainError, "omega needs x >= 0");
  return x - std::log1p(x);
}

double omega_star(double x) {
  if (!(x >= 0.0 && x < 1.0)) throw Error(ErrorCode::DomainError, "omega_star needs 0 <= x < 1");
  return -x - std::log1p(-x);
}

SuboptimalityBounds suboptimality_bounds(const Objective& obj, const Vec& x, double f_star,
                                         double slack) {
  SuboptimalityBounds b;
  b.lambda = newton_decrement(obj, x);
  if (!(b.lambda < 1.0))
    throw Error(ErrorCode::NotApplicable, "sandwich needs lambda < 1, got " + std::to_string(b.lambda));
  b.gap = obj.value(x) - f_star;
  b.lower = omega(b.lambda);
  b.upper = omega_star(b.lambda);
  b.holds = b.lower - slack <= b.gap && b.gap <= b.upper + slack;
  b.quadratic_applicable = b.lambda <= 0.68;
  b.quadratic_holds = !b.quadratic_applicable || b.gap <= b.lambda * b.lambda + slack;
  return b;
}

double eta_full(double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw Error(ErrorCode::DomainError, "eta needs eps in (0, 1]");
  return (3.0 - std::sqrt(9.0 - 4.0 * eps)) / 2.0;
}

double eta_coarse(double eps_hat) {
  if (!(eps_hat >= 0.0 && eps_hat <= 1.0))
    throw Error(ErrorCode::DomainError, "eta_hat needs eps_hat in [0, 1]");
  return (3.0 - std::sqrt(5.0 + 4.0 * eps_hat)) / 2.0;
}

PhaseReport phase_report(const std::vector<double>& lambda, const std::vector<double>& step,
                         const std::vector<double>& ratio_stream, PhaseVariant variant) {
  PhaseReport rep;
  rep.variant = variant;
  double mn = 1.0;
  for (double r : ratio_stream)
    if (std::isfinite(r)) mn = std::min(mn, std::max(0.0, r));
  if (variant == PhaseVariant::FullSpace) {
    rep.eps = mn;
    rep.eta = rep.eps > 0.0 ? eta_full(rep.eps) : 0.0;
  } else {
    rep.eps = std::sqrt(std::max(0.0, 1.0 - mn * mn));
    rep.eta = eta_coarse(rep.eps);
  }
  const std::size_t K = lambda.size();
  for (std::size_t k = 0; k + 1 < K; ++k)
    rep.ratios.push_back(lambda[k] > 0.0 ? lambda[k + 1] / lambda[k] : kNaN);
  for (std::size_t k = 0; k < K; ++k)
    if (lambda[k] <= rep.eta) {
      rep.entry = static_cast<int>(k);
      break;
    }
  if (rep.entry < 0) return rep;

  std::ostringstream why;
  why.precision(17);
  for (std::size_t k = rep.entry; k < K; ++k) {
    if (k < step.size() && std::isfinite(step[k]) && step[k] != 1.0 && rep.unit_steps) {
      rep.unit_steps = false;
      why << "step " << step[k] << " != 1 at k=" << k << "; ";
    }
    if (k + 1 < K) {
      if (!(lambda[k + 1] < lambda[k]) && rep.strictly_decreasing) {
        rep.strictly_decreasing = false;
        why << "lambda " << lambda[k + 1] << " >= " << lambda[k] << " at k=" << k + 1 << "; ";
      }
      if (lambda[k] > 0.0)
        rep.quadratic_constant =
            std::max(rep.quadratic_constant, lambda[k + 1] / (lambda[k] * lambda[k]));
    }
  }
  rep.violation = why.str();
  return rep;
}

std::vector<double> trace_newton_decrements(const Objective& obj, const IterationTrace& trace) {
  if (trace.iterates.size() != trace.records.size())
    throw Error(ErrorCode::Precondition, "trace was recorded without iterates");
  std::vector<double> out;
  out.reserve(trace.iterates.size());
  for (const Vec& x : trace.iterates) out.push_back(newton_decrement(obj, x));
  return out;
}

PhaseReport analyze_phase(const Objective& obj, const IterationTrace& trace,
                          const MethodConfig& cfg) {
  const std::vector<double> lam = trace_newton_decrements(obj, trace);
  std::vector<double> steps, ratios;
  for (const IterationRecord& r : trace.records) steps.push_back(r.step);
  PhaseVariant variant = PhaseVariant::FullSpace;
  if (cfg.kind == MethodKind::SigmaSVD || cfg.kind == MethodKind::Sigma) {
    variant = PhaseVariant::Coarse;
    for (std::size_t k = 0; k < lam.size(); ++k) {
      const double lh = trace.records[k].decrement;
      ratios.push_back(lam[k] > 0.0 && std::isfinite(lh) ? lh / lam[k] : kNaN);
    }
  } else if (cfg.kind == MethodKind::LowRankNewton) {
    const int n = obj.dim();
    for (const Vec& x : trace.iterates) {
      const Vec ev = dense_symmetric_eig(obj.dense_hessian(x)).values;
      ratios.push_back(ev[n - 1] / ev[cfg.N]);
    }
  }
  return phase_report(lam, steps, ratios, variant);
}

ReferenceResult reference_minimum(const Objective& obj, const Vec& x0, MethodKind kind, int iters,
                                  double grad_tol) {
  MethodConfig cfg;
  cfg.kind = kind;
  cfg.name = "reference";
  cfg.max_iters = iters;
  cfg.grad_tol = grad_tol;
  cfg.eps_exit = 1e-300;
  cfg.record_time = false;
  cfg.keep_iterates = true;
  ReferenceResult out;
  out.trace = run(obj, x0, cfg);
  if (out.trace.records.empty()) throw Error(ErrorCode::DomainError, out.trace.message);
  std::size_t best = 0;
  for (std::size_t k = 1; k < out.trace.records.size(); ++k)
    if (out.trace.records[k].f < out.trace.records[best].f) best = k;
  out.f_star = out.trace.records[best].f;
  out.x_star = out.trace.iterates[best];
  return out;
}

double escape_threshold(double f_saddle, double f_min) {
  if (!(f_saddle > 0.0 && f_min > 0.0 && f_min < f_saddle))
    throw Error(ErrorCode::Precondition, "threshold needs 0 < f_min < f_saddle");
  return std::exp(0.5 * (std::log(f_saddle) + std::log(f_min)));
}

EscapeOutcome escape_rate(const Objective& obj, const Vec& x0, const MethodConfig& base,
                          int trials, std::uint64_t master_seed, double threshold, int threads) {
  if (trials < 1) throw Error(ErrorCode::Precondition, "trials must be >= 1");
  EscapeOutcome out;
  out.trials = trials;
  out.best_f.assign(static_cast<std::size_t>(trials), kNaN);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < trials; i = next++) {
      MethodConfig cfg = base;
      cfg.seed = trial_seed(master_seed, static_cast<std::uint64_t>(i));
      cfg.record_time = false;
      cfg.keep_iterates = false;
      const IterationTrace t = run(obj, x0, cfg);
      double best = std::numeric_limits<double>::infinity();
      for (const IterationRecord& r : t.records) best = std::min(best, r.f);
      out.best_f[i] = best;
    }
  };
  const int nt = std::max(1, std::min(threads, trials));
  if (nt == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (double f : out.best_f)
    if (f < threshold) ++out.successes;
  out.probability = static_cast<double>(out.successes) / trials;
  return out;
}

bool proportions_consistent(int k1, int n1, int k2, int n2) {
  const double p1 = double(k1) / n1, p2 = double(k2) / n2;
  const double p = double(k1 + k2) / (n1 + n2);
  const double se = std::sqrt(p * (1.0 - p) * (1.0 / n1 + 1.0 / n2));
  if (se == 0.0) return p1 == p2;
  return std::abs(p1 - p2) <= 1.96 * se;
}

DegeneracyReport degeneracy_chain(const Objective& obj, const Vec& x) {
  const int n = obj.dim();
  const Vec g = obj.gradient(x);
  const Vec dn = newton_direction(obj, x, g).d;

  MethodConfig lr;
  lr.kind = MethodKind::LowRankNewton;
  lr.N = n - 1;
  lr.eig_backend = EigBackend::Dense;
  const Vec dl = lowrank_newton_direction(obj, x, g, lr, 0).d;

  MethodConfig sv;
  sv.kind = MethodKind::SigmaSVD;
  sv.N = n;
  sv.p = n - 1;
  sv.eig_backend = EigBackend::Dense;
  const Vec ds = sigmasvd_direction(obj, x, g, SamplingOperator::identity(n), sv, 0).d;

  auto rel = [](const Vec& a, const Vec& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); };
  DegeneracyReport r;
  r.sigmasvd_vs_newton = rel(ds, dn);
  r.lowrank_vs_newton = rel(dl, dn);
  r.sigmasvd_vs_lowrank = rel(ds, dl);
  return r;
}

}  // namespace sublevel
