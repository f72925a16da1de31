#include "sublevel/optimizers.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "sublevel/error.hpp"
#include "sublevel/rng.hpp"

namespace sublevel {

void LineSearchConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 0.5)) throw Error(ErrorCode::ConfigError, "alpha must lie in (0, 0.5)");
  if (!(beta > 0.0 && beta < 1.0)) throw Error(ErrorCode::ConfigError, "beta must lie in (0, 1)");
  if (!(t_init > 0.0)) throw Error(ErrorCode::ConfigError, "t_init must be positive");
  if (max_backtracks < 0) throw Error(ErrorCode::ConfigError, "max_backtracks must be >= 0");
}

LineSearchResult armijo(const Objective& obj, const Vec& x, [[maybe_unused]] double fx,
                        const Vec& d, const Vec& g, const LineSearchConfig& cfg) {
  const double slope = g.dot(d);
  if (!(slope < 0.0))
    throw Error(ErrorCode::Precondition,
                "not a descent direction (g^T d = " + std::to_string(slope) + ")");
  double t = cfg.t_init;
  for (int j = 0; j <= cfg.max_backtracks; ++j, t *= cfg.beta) {
    double change;
    try {
      change = obj.delta(x, d, t);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::DomainViolation || e.code() == ErrorCode::NonFinite) continue;
      throw;
    }
    if (change <= cfg.alpha * t * slope) {
      LineSearchResult res;
      res.t = t;
      res.x_new = x + t * d;
      res.f_new = obj.value(res.x_new);
      res.backtracks = j;
      return res;
    }
  }
  throw Error(ErrorCode::LineSearchFailed,
              "no acceptable step after " + std::to_string(cfg.max_backtracks) + " backtracks");
}

const char* to_string(MethodKind kind) {
  switch (kind) {
    case MethodKind::GD: return "gd";
    case MethodKind::AGD: return "agd";
    case MethodKind::Adam: return "adam";
    case MethodKind::Newton: return "newton";
    case MethodKind::CubicNewton: return "cubic";
    case MethodKind::NewSamp: return "newsamp";
    case MethodKind::LowRankNewton: return "lowrank_newton";
    case MethodKind::Sigma: return "sigma";
    case MethodKind::SigmaSVD: return "sigmasvd";
  }
  return "unknown";
}

MethodKind method_kind_from_string(const std::string& s) {
  for (MethodKind k : {MethodKind::GD, MethodKind::AGD, MethodKind::Adam, MethodKind::Newton,
                       MethodKind::CubicNewton, MethodKind::NewSamp, MethodKind::LowRankNewton,
                       MethodKind::Sigma, MethodKind::SigmaSVD})
    if (s == to_string(k)) return k;
  throw Error(ErrorCode::ConfigError, "unknown method type '" + s + "'");
}

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "Converged";
    case RunStatus::MaxIters: return "MaxIters";
    case RunStatus::LineSearchFailed: return "LineSearchFailed";
    case RunStatus::DomainError: return "DomainError";
    case RunStatus::NumericalError: return "NumericalError";
  }
  return "Unknown";
}

RunStatus run_status_from_string(const std::string& s) {
  for (RunStatus r : {RunStatus::Converged, RunStatus::MaxIters, RunStatus::LineSearchFailed,
                      RunStatus::DomainError, RunStatus::NumericalError})
    if (s == to_string(r)) return r;
  throw Error(ErrorCode::ParseError, "unknown run status '" + s + "'");
}

void MethodConfig::validate(int n) const {
  auto fail = [this](const std::string& msg) {
    throw Error(ErrorCode::ConfigError, (name.empty() ? to_string(kind) : name) + ": " + msg);
  };
  line_search.validate();
  if (max_iters < 0) fail("max_iters must be >= 0");
  if (!(grad_tol >= 0.0)) fail("grad_tol must be >= 0");
  if (!(nu > 0.0)) fail("nu must be positive");
  const bool second_order = kind == MethodKind::Newton || kind == MethodKind::NewSamp ||
                            kind == MethodKind::LowRankNewton || kind == MethodKind::Sigma ||
                            kind == MethodKind::SigmaSVD;
  if (second_order && !(eps_exit > 0.0 && eps_exit < 0.68 * 0.68))
    fail("epsilon must lie in (0, 0.68^2)");
  switch (kind) {
    case MethodKind::AGD:
      if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must lie in [0, 1)");
      break;
    case MethodKind::Adam:
      if (!(adam_lr > 0.0) || !(adam_beta1 >= 0.0 && adam_beta1 < 1.0) ||
          !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0))
        fail("invalid Adam constants");
      break;
    case MethodKind::CubicNewton:
      if (!(cubic_M0 > 0.0)) fail("initial cubic regularizer must be positive");
      break;
    case MethodKind::LowRankNewton:
      if (N < 1 || N >= n) fail("N must satisfy 1 <= N < n");
      break;
    case MethodKind::NewSamp:
      if (p < 1 || p >= n) fail("p must satisfy 1 <= p < n");
      if (sample_rows < 1) fail("rows must be positive");
      break;
    case MethodKind::Sigma:
      if (N < 1 || N > n) fail("N must satisfy 1 <= N <= n");
      break;
    case MethodKind::SigmaSVD:
      if (N < 2 || N > n) fail("N must satisfy 2 <= N <= n");
      if (p < 1 || p >= N) fail("p must satisfy 1 <= p < N");
      break;
    default: break;
  }
}

namespace {

RandomizedOptions randomized_options(const MethodConfig& cfg, std::uint64_t seed) {
  RandomizedOptions o;
  o.oversample = cfg.oversample;
  o.power_iters = cfg.power_iters;
  o.seed = splitmix64(seed);
  return o;
}

double decrement_of(const Vec& g, const Vec& d) {
  const double q = -g.dot(d);
  return q >= 0.0 ? std::sqrt(q) : kNaN;
}

std::uint64_t step_seed(const MethodConfig& cfg, int k) {
  return iteration_seed(cfg.seed, cfg.fixed_subspace ? 0 : static_cast<std::uint64_t>(k));
}

}  // namespace

SamplingOperator iteration_operator(int n, const MethodConfig& cfg, int k, int attempt) {
  if (cfg.N >= n) return SamplingOperator::identity(n);
  std::uint64_t seed = step_seed(cfg, k);
  if (attempt > 0) seed = splitmix64(seed + static_cast<std::uint64_t>(attempt));
  return SamplingOperator::sample(n, cfg.N, seed);
}

DirectionResult newton_direction(const Objective& obj, const Vec& x, const Vec& g) {
  const Mat H = obj.dense_hessian(x);
  DirectionResult r;
  Eigen::LLT<Mat> llt(H);
  if (llt.info() == Eigen::Success) {
    r.d = -llt.solve(g);
  } else {
    Eigen::LDLT<Mat> ldlt(H);
    const Vec D = ldlt.vectorD();
    const double scale = D.cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || !(scale > 0.0) ||
        D.cwiseAbs().minCoeff() <= 1e-14 * scale)
      throw Error(ErrorCode::SingularHessian, "Hessian is numerically singular");
    r.d = -ldlt.solve(g);
  }
  if (!r.d.allFinite()) throw Error(ErrorCode::SingularHessian, "Newton system not solvable");
  r.decrement = decrement_of(g, r.d);
  return r;
}

DirectionResult lowrank_newton_direction(const Objective& obj, const Vec& x, const Vec& g,
                                         const MethodConfig& cfg, std::uint64_t seed) {
  const int n = obj.dim();
  if (cfg.N + 1 > n) throw Error(ErrorCode::RankTooLarge, "N+1 exceeds n");
  TruncatedSpectrum spec =
      cfg.eig_backend == EigBackend::Dense
          ? dense_tsvd(obj.dense_hessian(x), cfg.N, cfg.mode, cfg.nu)
          : randomized_tsvd([&obj, &x](const Mat& V) { return obj.hessian_block(V, x); }, n,
                            cfg.N, cfg.mode, randomized_options(cfg, seed), cfg.nu);
  DirectionResult r;
  r.d = -spec.apply_inverse(g);
  r.decrement = decrement_of(g, r.d);
  r.sigma_floor = spec.floor();
  return r;
}

DirectionResult newsamp_direction(const Objective& obj, const Vec& x, const Vec& g,
                                  const MethodConfig& cfg, std::uint64_t seed) {
  const int m = obj.rows();
  if (m < 1) throw Error(ErrorCode::Precondition, "NewSamp needs a row-structured objective");
  std::vector<int> rows;
  if (cfg.sample_rows >= m) {
    rows.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) rows[i] = i;
  } else {
    rows = sample_without_replacement(m, cfg.sample_rows, seed);
  }
  const Mat Hs = obj.subsampled_hessian(x, rows);
  TruncatedSpectrum spec =
      cfg.eig_backend == EigBackend::Dense
          ? dense_tsvd(Hs, cfg.p, cfg.mode, cfg.nu)
          : randomized_tsvd(dense_operator(Hs), obj.dim(), cfg.p, cfg.mode,
                            randomized_options(cfg, seed), cfg.nu);
  DirectionResult r;
  r.d = -spec.apply_inverse(g);
  r.decrement = decrement_of(g, r.d);
  r.sigma_floor = spec.floor();
  return r;
}

DirectionResult sigma_direction(const Objective& obj, const Vec& x, const Vec& g,
                                const SamplingOperator& op) {
  const Mat Hr = obj.reduced_hessian(x, op);
  Eigen::LLT<Mat> llt(Hr);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::SingularReducedHessian, "reduced Hessian is not positive definite");
  DirectionResult r;
  r.d = -op.prolong(llt.solve(op.restrict(g)));
  if (!r.d.allFinite())
    throw Error(ErrorCode::SingularReducedHessian, "reduced system not solvable");
  r.decrement = decrement_of(g, r.d);
  return r;
}

DirectionResult sigmasvd_direction(const Objective& obj, const Vec& x, const Vec& g,
                                   const SamplingOperator& op, const MethodConfig& cfg,
                                   std::uint64_t seed) {
  const Mat Hr = obj.reduced_hessian(x, op);
  TruncatedSpectrum spec =
      cfg.eig_backend == EigBackend::Dense
          ? dense_tsvd(Hr, cfg.p, cfg.mode, cfg.nu)
          : randomized_tsvd(dense_operator(Hr), op.coarse_dim(), cfg.p, cfg.mode,
                            randomized_options(cfg, seed), cfg.nu);
  LowRankInverse Q(std::move(spec), op);
  DirectionResult r;
  r.d = -Q.apply(g);
  r.decrement = decrement_of(g, r.d);
  r.sigma_floor = Q.spectrum().floor();
  return r;
}

Vec cubic_subproblem(const Mat& H, const Vec& g, double M) {
  if (!(M > 0.0)) throw Error(ErrorCode::Precondition, "cubic regularizer must be positive");
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (H + H.transpose()));
  const Vec lam = es.eigenvalues();
  const Mat& V = es.eigenvectors();
  const Vec gh = V.transpose() * g;
  const int n = static_cast<int>(lam.size());
  const double lmin = lam[0];
  const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
  const double gnorm = g.norm();

  auto coeffs = [&](double r) {
    Vec c(n);
    for (int i = 0; i < n; ++i) c[i] = -gh[i] / (lam[i] + 0.5 * M * r);
    return c;
  };

  const double r_lo = std::max(0.0, -2.0 * lmin / M);
  if (lmin <= 1e-12 * scale) {
    // Possible hard case: gradient (nearly) orthogonal to the bottom eigenspace.
    double bottom = 0.0;
    for (int i = 0; i < n && lam[i] - lmin <= 1e-10 * scale; ++i) bottom += gh[i] * gh[i];
    if (std::sqrt(bottom) <= 1e-12 * std::max(1.0, gnorm)) {
      Vec c = Vec::Zero(n);
      int first_free = 0;
      while (first_free < n && lam[first_free] - lmin <= 1e-10 * scale) ++first_free;
      for (int i = first_free; i < n; ++i) c[i] = -gh[i] / (lam[i] + 0.5 * M * r_lo);
      const double partial = c.norm();
      if (partial <= r_lo) {
        c[0] = std::sqrt(std::max(0.0, r_lo * r_lo - partial * partial));
        return V * c;
      }
    }
  }
  if (gnorm == 0.0) return Vec::Zero(n);

  auto phi = [&](double r) { return coeffs(r).norm() - r; };
  double lo = r_lo;
  double hi = std::max(2.0 * r_lo, 1.0);
  while (phi(hi) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= r_lo || phi(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return V * coeffs(hi);
}

MethodState initial_state(const Objective& obj, const Vec& x0, const MethodConfig& cfg) {
  MethodState s;
  s.x = x0;
  s.f = obj.value(x0);
  s.g = obj.gradient(x0);
  s.x_prev = x0;
  s.m1 = Vec::Zero(x0.size());
  s.m2 = Vec::Zero(x0.size());
  s.cubic_M = cfg.cubic_M0;
  return s;
}

namespace {

void commit(MethodState& s, const Objective& obj, Vec x_new, double f_new) {
  s.x_prev = s.x;
  s.x = std::move(x_new);
  s.f = f_new;
  s.g = obj.gradient(s.x);
  ++s.k;
}

StepInfo descend(MethodState& s, const Objective& obj, const MethodConfig& cfg,
                 const DirectionResult& dir, bool use_exit_test) {
  StepInfo info;
  info.decrement = dir.decrement;
  info.sigma_floor = dir.sigma_floor;
  if (use_exit_test && -s.g.dot(dir.d) <= cfg.eps_exit) {
    info.converged = true;
    return info;
  }
  if (cfg.step_rule == StepRule::Theoretical && std::isfinite(dir.decrement)) {
    const double t = 1.0 / (1.0 + dir.decrement);
    Vec x_new = s.x + t * dir.d;
    if (!obj.in_domain(x_new))
      throw Error(ErrorCode::DomainError, "damped step left the domain");
    const double f_new = obj.value(x_new);
    commit(s, obj, std::move(x_new), f_new);
    info.step = t;
    return info;
  }
  LineSearchResult ls = armijo(obj, s.x, s.f, dir.d, s.g, cfg.line_search);
  commit(s, obj, std::move(ls.x_new), ls.f_new);
  info.step = ls.t;
  return info;
}

}  // namespace

StepInfo step_gd(MethodState& s, const Objective& obj, const MethodConfig& cfg) {
  DirectionResult dir;
  dir.d = -s.g;
  return descend(s, obj, cfg, dir, false);
}

StepInfo step_agd(MethodState& s, const Objective& obj, const MethodConfig& cfg) {
  Vec y = s.x + cfg.momentum * (s.x - s.x_prev);
  if (!obj.in_domain(y)) y = s.x;
  const bool moved = (y - s.x).squaredNorm() > 0.0;
  const double fy = moved ? obj.value(y) : s.f;
  const Vec gy = moved ? obj.gradient(y) : s.g;
  StepInfo info;
  if (gy.squaredNorm() == 0.0) {
    commit(s, obj, y, fy);
    info.step = 0.0;
    return info;
  }
  const Vec d = -gy;
  LineSearchResult ls = armijo(obj, y, fy, d, gy, cfg.line_search);
  commit(s, obj, std::move(ls.x_new), ls.f_new);
  info.step = ls.t;
  return info;
}

StepInfo step_adam(MethodState& s, const Objective& obj, const MethodConfig& cfg) {
  const double t = static_cast<double>(s.k + 1);
  s.m1 = cfg.adam_beta1 * s.m1 + (1.0 - cfg.adam_beta1) * s.g;
  s.m2 = cfg.adam_beta2 * s.m2 + (1.0 - cfg.adam_beta2) * s.g.cwiseAbs2();
  const Vec mhat = s.m1 / (1.0 - std::pow(cfg.adam_beta1, t));
  const Vec vhat = s.m2 / (1.0 - std::pow(cfg.adam_beta2, t));
  Vec x_new = s.x - cfg.adam_lr * mhat.cwiseQuotient((vhat.cwiseSqrt().array() + cfg.adam_eps).matrix());
  if (!obj.in_domain(x_new)) throw Error(ErrorCode::DomainError, "Adam step left the domain");
  const double f_new = obj.value(x_new);
  commit(s, obj, std::move(x_new), f_new);
  StepInfo info;
  info.step = cfg.adam_lr;
  return info;
}

StepInfo step_newton(MethodState& s, const Objective& obj, const MethodConfig& cfg) {
  return descend(s, obj, cfg, newton_direction(obj, s.x, s.g), true);
}

StepInfo step_cubic(MethodState& s, const Objective& obj, const MethodConfig& cfg) {
  const Mat H = obj.dense_hessian(s.x);
  double M = s.cubic_M;
  StepInfo info;
  for (int attempt = 0; attempt < 80; ++attempt, M *= 2.0) {
    const Vec d = cubic_subproblem(H, s.g, M);
    const double dn = d.norm();
    const double model = s.g.dot(d) + 0.5 * d.dot(H * d) + M / 6.0 * dn * dn * dn;
    if (attempt == 0 && (dn == 0.0 || -model <= cfg.eps_exit)) {
      info.converged = true;
      return info;
    }
    double change;
    try {
      change = obj.delta(s.x, d, 1.0);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::DomainViolation || e.code() == ErrorCode::NonFinite) continue;
      throw;
    }
    if (change <= model) {
      Vec x_new = s.x + d;
      const double f_new = obj.value(x_new);
      commit(s, obj, std::move(x_new), f_new);
      s.cubic_M = 0.5 * M;
      info.step = 1.0;
      return info;
    }
  }
  throw Error(ErrorCode::LineSearchFailed, "cubic regularizer search exhausted");
}

StepInfo step_newsamp(MethodState& s, const Objective& obj, const MethodConfig& cfg) {
  return descend(s, obj, cfg, newsamp_direction(obj, s.x, s.g, cfg, step_seed(cfg, s.k)), true);
}

StepInfo step_lowrank_newton(MethodState& s, const Objective& obj, const MethodConfig& cfg) {
  return descend(s, obj, cfg,
                 lowrank_newton_direction(obj, s.x, s.g, cfg, step_seed(cfg, s.k)), true);
}

StepInfo step_sigma(MethodState& s, const Objective& obj, const MethodConfig& cfg) {
  const int n = obj.dim();
  DirectionResult dir;
  try {
    dir = sigma_direction(obj, s.x, s.g, iteration_operator(n, cfg, s.k, 0));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingularReducedHessian || cfg.N >= n) throw;
    dir = sigma_direction(obj, s.x, s.g, iteration_operator(n, cfg, s.k, 1));
  }
  return descend(s, obj, cfg, dir, true);
}

StepInfo step_sigmasvd(MethodState& s, const Objective& obj, const MethodConfig& cfg) {
  const SamplingOperator op = iteration_operator(obj.dim(), cfg, s.k, 0);
  return descend(s, obj, cfg, sigmasvd_direction(obj, s.x, s.g, op, cfg, step_seed(cfg, s.k)),
                 true);
}

StepInfo step(MethodState& s, const Objective& obj, const MethodConfig& cfg) {
  switch (cfg.kind) {
    case MethodKind::GD: return step_gd(s, obj, cfg);
    case MethodKind::AGD: return step_agd(s, obj, cfg);
    case MethodKind::Adam: return step_adam(s, obj, cfg);
    case MethodKind::Newton: return step_newton(s, obj, cfg);
    case MethodKind::CubicNewton: return step_cubic(s, obj, cfg);
    case MethodKind::NewSamp: return step_newsamp(s, obj, cfg);
    case MethodKind::LowRankNewton: return step_lowrank_newton(s, obj, cfg);
    case MethodKind::Sigma: return step_sigma(s, obj, cfg);
    case MethodKind::SigmaSVD: return step_sigmasvd(s, obj, cfg);
  }
  throw Error(ErrorCode::Precondition, "unknown method");
}

IterationTrace run(const Objective& obj, const Vec& x0, const MethodConfig& cfg) {
  cfg.validate(obj.dim());
  IterationTrace trace;
  if (x0.size() != obj.dim() || !obj.in_domain(x0)) {
    trace.status = RunStatus::DomainError;
    trace.message = "initial point outside the domain";
    return trace;
  }
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(Clock::now() - start).count();
  };

  MethodState s;
  try {
    s = initial_state(obj, x0, cfg);
  } catch (const Error& e) {
    trace.status = RunStatus::NumericalError;
    trace.message = e.what();
    return trace;
  }

  for (;;) {
    IterationRecord rec;
    rec.k = s.k;
    rec.f = s.f;
    rec.grad_norm = s.g.norm();
    const double now = elapsed();
    rec.elapsed_s = cfg.record_time ? now : 0.0;
    if (cfg.keep_iterates) trace.iterates.push_back(s.x);

    if (!std::isfinite(rec.f) || !std::isfinite(rec.grad_norm)) {
      trace.status = RunStatus::NumericalError;
      trace.message = "non-finite objective or gradient";
      trace.records.push_back(rec);
      break;
    }
    if (cfg.grad_tol > 0.0 && rec.grad_norm <= cfg.grad_tol) {
      trace.status = RunStatus::Converged;
      trace.message = "gradient tolerance reached";
      trace.records.push_back(rec);
      break;
    }
    if (s.k >= cfg.max_iters || now > cfg.max_seconds) {
      trace.status = RunStatus::MaxIters;
      trace.message = s.k >= cfg.max_iters ? "iteration budget exhausted" : "time budget exhausted";
      trace.records.push_back(rec);
      break;
    }

    StepInfo info;
    try {
      info = step(s, obj, cfg);
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::LineSearchFailed: trace.status = RunStatus::LineSearchFailed; break;
        case ErrorCode::DomainViolation:
        case ErrorCode::DomainError: trace.status = RunStatus::DomainError; break;
        default: trace.status = RunStatus::NumericalError;
      }
      trace.message = e.what();
      trace.records.push_back(rec);
      break;
    }
    rec.decrement = info.decrement;
    rec.sigma_floor = info.sigma_floor;
    if (info.converged) {
      trace.status = RunStatus::Converged;
      trace.message = "exit test satisfied";
      trace.records.push_back(rec);
      break;
    }
    rec.step = info.step;
    trace.records.push_back(rec);
  }
  return trace;
}

}  // namespace sublevel
