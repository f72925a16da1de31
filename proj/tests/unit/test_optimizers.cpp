#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "sublevel/diagnostics.hpp"
#include "sublevel/error.hpp"
#include "sublevel/optimizers.hpp"

using namespace sublevel;
using namespace testing_support;

namespace {

MethodConfig method(MethodKind kind, int max_iters = 100) {
  MethodConfig c;
  c.kind = kind;
  c.name = to_string(kind);
  c.max_iters = max_iters;
  c.record_time = false;
  return c;
}

}  // namespace

TEST(Armijo, UnitStepOnHalfSquare) {
  const QuadraticObjective q = QuadraticObjective::half_norm(1);
  const Vec x = Vec::Ones(1), d = -Vec::Ones(1);
  const LineSearchResult r = armijo(q, x, q.value(x), d, q.gradient(x), {});
  EXPECT_EQ(r.t, 1.0);
  EXPECT_EQ(r.backtracks, 0);
  EXPECT_NEAR(r.f_new, 0.0, 1e-16);
}

TEST(Armijo, AscentDirectionRejected) {
  const QuadraticObjective q = QuadraticObjective::half_norm(2);
  const Vec x = Vec::Ones(2);
  try {
    armijo(q, x, q.value(x), Vec::Ones(2), q.gradient(x), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Precondition);
  }
}

TEST(Armijo, LeavesDomainThenShrinks) {
  Mat A(2, 1);
  A << 1, -1;
  const GlmObjective obj(ProblemKind::LogLinear, A, Vec::Ones(2));  // domain (-1, 1)
  const Vec x = Vec::Constant(1, 0.5);
  const Vec g = obj.gradient(x);
  const Vec d = Vec::Constant(1, -3.0);  // x + d = -2.5 is infeasible
  ASSERT_LT(g.dot(d), 0.0);
  const LineSearchResult r = armijo(obj, x, obj.value(x), d, g, {});
  EXPECT_LT(r.t, 0.5);
  EXPECT_TRUE(obj.in_domain(x + r.t * d));
  EXPECT_NEAR(r.t, std::pow(0.7, r.backtracks), 1e-15);
}

TEST(Armijo, ExhaustedBacktracks) {
  const QuadraticObjective q = QuadraticObjective::half_norm(1);
  LineSearchConfig cfg;
  cfg.t_init = 1e6;
  cfg.max_backtracks = 3;
  const Vec x = Vec::Ones(1);
  try {
    armijo(q, x, q.value(x), -Vec::Ones(1), q.gradient(x), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LineSearchFailed);
  }
}

TEST(Armijo, ConfigValidation) {
  LineSearchConfig c;
  c.alpha = 0.5;
  EXPECT_THROW(c.validate(), Error);
  c.alpha = 1e-3;
  c.beta = 1.0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(FirstOrder, GdOnHalfSquare) {
  const QuadraticObjective q = QuadraticObjective::half_norm(1);
  const IterationTrace t = run(q, Vec::Ones(1), method(MethodKind::GD, 60));
  for (std::size_t k = 1; k < t.records.size(); ++k) EXPECT_LE(t.records[k].f, t.records[k - 1].f);
  EXPECT_LE(std::sqrt(2 * t.records.back().f), 1e-6);
}

TEST(FirstOrder, AdamFirstStep) {
  const GlmObjective obj = glm(ProblemKind::Logistic, 100, 10, 1, 1e-3);
  const Vec x0 = Vec::Constant(10, 0.2);
  const MethodConfig c = method(MethodKind::Adam);
  MethodState s = initial_state(obj, x0, c);
  step(s, obj, c);
  const Vec dx = (s.x - x0).cwiseAbs();
  EXPECT_LE(dx.maxCoeff(), 1e-3);
  EXPECT_GE(dx.minCoeff(), 1e-3 * (1 - 1e-4));
}

TEST(FirstOrder, AgdZeroMomentumIsGd) {
  const GlmObjective obj = glm(ProblemKind::Logistic, 100, 10, 2, 1e-3);
  MethodConfig a = method(MethodKind::AGD, 20);
  a.momentum = 0.0;
  const IterationTrace ta = run(obj, Vec::Zero(10), a);
  const IterationTrace tg = run(obj, Vec::Zero(10), method(MethodKind::GD, 20));
  ASSERT_EQ(ta.records.size(), tg.records.size());
  for (std::size_t k = 0; k < ta.records.size(); ++k) EXPECT_EQ(ta.records[k].f, tg.records[k].f);
}

TEST(SecondOrder, NewtonQuadraticOneStep) {
  std::mt19937_64 gen(3);
  const Mat H = with_spectrum(Vec::LinSpaced(12, 7, 0.3), gen);
  const Vec c = gaussian(12, gen);
  const QuadraticObjective q(H, c);
  const MethodConfig m = method(MethodKind::Newton, 5);
  MethodState s = initial_state(q, gaussian(12, gen), m);
  const StepInfo info = step(s, q, m);
  EXPECT_EQ(info.step, 1.0);
  EXPECT_LE(rel(s.x, H.llt().solve(c)), 1e-10);
}

TEST(SecondOrder, NewtonSingular) {
  const QuadraticObjective q(Mat::Zero(3, 3), Vec::Ones(3));
  const Vec x = Vec::Zero(3);
  try {
    newton_direction(q, x, q.gradient(x));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularHessian);
  }
}

TEST(SecondOrder, NewtonLogLinearConverges) {
  const GlmObjective obj = glm(ProblemKind::LogLinear, 500, 50, 4);
  MethodConfig c = method(MethodKind::Newton, 20);
  c.eps_exit = 1e-24;
  c.keep_iterates = true;
  const IterationTrace t = run(obj, Vec::Zero(50), c);
  EXPECT_LE(t.records.back().k, 20);
  EXPECT_LE(newton_decrement(obj, t.iterates.back()), 1e-10);
}

TEST(SecondOrder, CubicSubproblemStationarity) {
  std::mt19937_64 gen(5);
  Vec ev = Vec::LinSpaced(8, 3, -2);
  const Mat H = with_spectrum(ev, gen);
  const Vec g = gaussian(8, gen);
  const double M = 2.0;
  const Vec d = cubic_subproblem(H, g, M);
  // optimality: (H + (M/2)|d| I) d = -g with H + (M/2)|d| I PSD
  const Vec res = H * d + 0.5 * M * d.norm() * d + g;
  EXPECT_LE(res.norm(), 1e-8 * g.norm());
  EXPECT_GE(ev.minCoeff() + 0.5 * M * d.norm(), -1e-10);
}

TEST(SecondOrder, CubicDecreasesAtSaddle) {
  // f = 0.5 x^T diag(1, -1) x has a strict saddle at 0; start slightly off it
  Mat H(2, 2);
  H << 1, 0, 0, -1;
  const QuadraticObjective q(H, Vec::Zero(2));
  const MethodConfig c = method(MethodKind::CubicNewton, 1);
  MethodState s = initial_state(q, Vec(Eigen::Vector2d(0.1, 1e-6)), c);
  const double f0 = s.f;
  step(s, q, c);
  EXPECT_LT(s.f, f0);
  EXPECT_GT(std::abs(s.x(1)), 1e-3);
}

TEST(LowRank, FullRankIsNewton) {
  const GlmObjective obj = glm(ProblemKind::Logistic, 300, 40, 6, 1e-3);
  std::mt19937_64 gen(6);
  const Vec x = gaussian(40, gen, 0.2);
  const Vec g = obj.gradient(x);
  MethodConfig c = method(MethodKind::LowRankNewton);
  c.N = 39;
  EXPECT_LE(rel(lowrank_newton_direction(obj, x, g, c, 1).d, newton_direction(obj, x, g).d), 1e-8);
}

TEST(LowRank, IdentityHessianGivesGradientStep) {
  const QuadraticObjective q = QuadraticObjective::half_norm(10);
  std::mt19937_64 gen(7);
  const Vec x = gaussian(10, gen);
  MethodConfig c = method(MethodKind::LowRankNewton);
  for (int N : {1, 4, 9}) {
    c.N = N;
    EXPECT_LE(rel(lowrank_newton_direction(q, x, x, c, 3).d, -x), 1e-12);
  }
}

TEST(LowRank, NonConvexDescentOnNls) {
  SyntheticSpec s;
  s.m = 300;
  s.n = 60;
  s.seed = 8;
  s.distribution = Distribution::SaddlePlateau;
  s.labels_for = ProblemKind::NonlinearLeastSquares;
  SyntheticData d = generate_synthetic(s);
  const GlmObjective obj(ProblemKind::NonlinearLeastSquares, d.A, d.b);
  std::mt19937_64 gen(8);
  MethodConfig c = method(MethodKind::LowRankNewton);
  c.N = 20;
  c.mode = SpectrumMode::NonConvexTruncated;
  for (int t = 0; t < 10; ++t) {
    const Vec x = gaussian(60, gen, 1.0);
    const Vec g = obj.gradient(x);
    EXPECT_LT(g.dot(lowrank_newton_direction(obj, x, g, c, t).d), 0.0);
  }
}

TEST(LowRank, ConvexModeNeedsPositiveFloor) {
  Mat H = Vec(Eigen::Vector3d(2, 1, -1)).asDiagonal();
  const QuadraticObjective q(H, Vec::Ones(3));
  MethodConfig c = method(MethodKind::LowRankNewton);
  c.N = 2;
  c.eig_backend = EigBackend::Dense;
  const Vec x = Vec::Zero(3);
  try {
    lowrank_newton_direction(q, x, q.gradient(x), c, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
  }
}

TEST(NewSamp, AllRowsMatchesLowRank) {
  const GlmObjective obj = glm(ProblemKind::Logistic, 200, 30, 9, 1e-3);
  std::mt19937_64 gen(9);
  const Vec x = gaussian(30, gen, 0.2);
  const Vec g = obj.gradient(x);
  MethodConfig ns = method(MethodKind::NewSamp);
  ns.p = 10;
  ns.sample_rows = 200;
  ns.eig_backend = EigBackend::Dense;
  MethodConfig lr = method(MethodKind::LowRankNewton);
  lr.N = 10;
  lr.eig_backend = EigBackend::Dense;
  EXPECT_LE(rel(newsamp_direction(obj, x, g, ns, 4).d, lowrank_newton_direction(obj, x, g, lr, 4).d), 1e-10);
}

TEST(NewSamp, DeterministicAndDescent) {
  const GlmObjective obj = glm(ProblemKind::Logistic, 1000, 40, 10, 1e-3);
  std::mt19937_64 gen(10);
  MethodConfig c = method(MethodKind::NewSamp);
  c.p = 10;
  c.sample_rows = 300;
  for (int t = 0; t < 50; ++t) {
    const Vec x = gaussian(40, gen, 0.3);
    const Vec g = obj.gradient(x);
    const Vec d = newsamp_direction(obj, x, g, c, t).d;
    EXPECT_LT(g.dot(d), 0.0);
    if (t == 0) EXPECT_EQ(d, newsamp_direction(obj, x, g, c, t).d);
  }
}

TEST(Sigma, PermutationIsNewton) {
  const GlmObjective obj = glm(ProblemKind::Logistic, 200, 20, 11, 1e-3);
  std::mt19937_64 gen(11);
  const Vec x = gaussian(20, gen, 0.2);
  const Vec g = obj.gradient(x);
  std::vector<int> perm(20);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), gen);
  std::sort(perm.begin(), perm.end());
  const SamplingOperator op = SamplingOperator::from_indices(20, perm);
  EXPECT_LE(rel(sigma_direction(obj, x, g, op).d, newton_direction(obj, x, g).d), 1e-10);
}

TEST(Sigma, DiagonalQuadraticBlock) {
  Mat H = Vec::LinSpaced(6, 1, 6).asDiagonal();
  const Vec c = Vec::Ones(6);
  const QuadraticObjective q(H, c);
  const Vec x = Vec::Zero(6);
  const SamplingOperator op = SamplingOperator::from_indices(6, {1, 4});
  const Vec d = sigma_direction(q, x, q.gradient(x), op).d;
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(d(i), (i == 1 || i == 4) ? 1.0 / (i + 1) : 0.0, 1e-15);
}

TEST(Sigma, SingularReducedHessian) {
  Mat H = Mat::Identity(4, 4);
  H(2, 2) = 0.0;
  const QuadraticObjective q(H, Vec::Ones(4));
  const Vec x = Vec::Zero(4);
  try {
    sigma_direction(q, x, q.gradient(x), SamplingOperator::from_indices(4, {0, 2}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularReducedHessian);
  }
}

TEST(SigmaSvd, ExitAtStationaryPoint) {
  const QuadraticObjective q = QuadraticObjective::half_norm(10);
  MethodConfig c = method(MethodKind::SigmaSVD);
  c.N = 5;
  c.p = 2;
  const IterationTrace t = run(q, Vec::Zero(10), c);
  EXPECT_EQ(t.status, RunStatus::Converged);
  ASSERT_EQ(t.records.size(), 1u);
  EXPECT_EQ(t.records[0].decrement, 0.0);
}

TEST(SigmaSvd, DecrementIdentity) {
  const GlmObjective obj = glm(ProblemKind::Logistic, 500, 100, 12, 1e-3);
  std::mt19937_64 gen(12);
  MethodConfig c = method(MethodKind::SigmaSVD);
  c.N = 50;
  c.p = 20;
  for (int t = 0; t < 5; ++t) {
    const Vec x = gaussian(100, gen, 0.1);
    const Vec g = obj.gradient(x);
    const SamplingOperator op = iteration_operator(100, c, t);
    const DirectionResult r = sigmasvd_direction(obj, x, g, op, c, t);
    EXPECT_NEAR(r.decrement * r.decrement, -g.dot(r.d), 1e-12 * std::max(1.0, -g.dot(r.d)));
  }
}

TEST(SigmaSvd, FullSpaceUnitStepOnQuadratic) {
  std::mt19937_64 gen(13);
  const Mat H = with_spectrum(Vec::LinSpaced(10, 4, 1), gen);
  const QuadraticObjective q(H, gaussian(10, gen));
  MethodConfig c = method(MethodKind::SigmaSVD, 3);
  c.N = 10;
  c.p = 9;
  MethodState s = initial_state(q, Vec::Zero(10), c);
  const StepInfo info = step(s, q, c);
  EXPECT_EQ(info.step, 1.0);
  EXPECT_LE(q.gradient(s.x).norm(), 1e-10);
}

TEST(SigmaSvd, DescentBothModes) {
  std::mt19937_64 gen(14);
  const GlmObjective lg = glm(ProblemKind::Logistic, 300, 40, 14, 1e-3);
  const GlmObjective nls = glm(ProblemKind::NonlinearLeastSquares, 300, 40, 14);
  MethodConfig c = method(MethodKind::SigmaSVD);
  c.N = 20;
  c.p = 6;
  for (int t = 0; t < 20; ++t) {
    const Vec x = gaussian(40, gen, 0.5);
    for (const GlmObjective* o : {&lg, &nls}) {
      c.mode = o == &lg ? SpectrumMode::Convex : SpectrumMode::NonConvexTruncated;
      const Vec g = o->gradient(x);
      const Vec d = sigmasvd_direction(*o, x, g, iteration_operator(40, c, t), c, t).d;
      EXPECT_LT(g.dot(d), 0.0);
    }
  }
}

TEST(Config, Validation) {
  MethodConfig c = method(MethodKind::SigmaSVD);
  c.N = 10;
  c.p = 10;
  EXPECT_THROW(c.validate(20), Error);
  c.p = 4;
  EXPECT_NO_THROW(c.validate(20));
  c.eps_exit = 0.5;
  EXPECT_THROW(c.validate(20), Error);
  MethodConfig l = method(MethodKind::LowRankNewton);
  l.N = 20;
  EXPECT_THROW(l.validate(20), Error);
}

TEST(Driver, ZeroIterations) {
  const GlmObjective obj = glm(ProblemKind::Logistic, 50, 5, 15);
  for (MethodKind k : {MethodKind::GD, MethodKind::Newton, MethodKind::Adam}) {
    const IterationTrace t = run(obj, Vec::Zero(5), method(k, 0));
    EXPECT_EQ(t.records.size(), 1u);
    EXPECT_EQ(t.status, RunStatus::MaxIters);
  }
}

TEST(Driver, SharedStart) {
  const GlmObjective obj = glm(ProblemKind::LogLinear, 200, 20, 16);
  MethodConfig s = method(MethodKind::SigmaSVD, 5);
  s.N = 10;
  s.p = 4;
  const IterationTrace a = run(obj, Vec::Zero(20), method(MethodKind::GD, 5));
  const IterationTrace b = run(obj, Vec::Zero(20), s);
  EXPECT_EQ(a.records[0].f, b.records[0].f);
}

TEST(Driver, InfeasibleStart) {
  Mat A(1, 1);
  A << 1;
  const GlmObjective obj(ProblemKind::LogLinear, A, Vec::Ones(1));
  const IterationTrace t = run(obj, Vec::Constant(1, 5.0), method(MethodKind::Newton));
  EXPECT_EQ(t.status, RunStatus::DomainError);
  EXPECT_TRUE(t.records.empty());
}

TEST(Driver, MonotoneDescentMethods) {
  const GlmObjective obj = glm(ProblemKind::Logistic, 300, 30, 17, 1e-3);
  for (MethodKind k : {MethodKind::GD, MethodKind::Newton, MethodKind::LowRankNewton, MethodKind::NewSamp,
                       MethodKind::Sigma, MethodKind::SigmaSVD, MethodKind::CubicNewton}) {
    MethodConfig c = method(k, 30);
    c.N = 15;
    c.p = 5;
    c.sample_rows = 100;
    const IterationTrace t = run(obj, Vec::Constant(30, 0.1), c);
    for (std::size_t i = 1; i < t.records.size(); ++i)
      EXPECT_LE(t.records[i].f, t.records[i - 1].f) << to_string(k);
  }
}

TEST(Driver, Reproducible) {
  const GlmObjective obj = glm(ProblemKind::Logistic, 200, 30, 18, 1e-3);
  MethodConfig c = method(MethodKind::SigmaSVD, 20);
  c.N = 12;
  c.p = 4;
  c.seed = 77;
  const IterationTrace a = run(obj, Vec::Zero(30), c), b = run(obj, Vec::Zero(30), c);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) EXPECT_EQ(a.records[k].f, b.records[k].f);
  c.seed = 78;
  const IterationTrace d = run(obj, Vec::Zero(30), c);
  EXPECT_NE(d.records[2].f, a.records[2].f);
}

TEST(Driver, TheoreticalStepRule) {
  const GlmObjective obj = glm(ProblemKind::LogLinear, 300, 20, 19);
  MethodConfig c = method(MethodKind::LowRankNewton, 50);
  c.N = 15;
  c.step_rule = StepRule::Theoretical;
  const IterationTrace t = run(obj, Vec::Zero(20), c);
  EXPECT_EQ(t.status, RunStatus::Converged);
  const IterationRecord& r0 = t.records[0];
  EXPECT_NEAR(r0.step, 1.0 / (1.0 + r0.decrement), 1e-15);
}

TEST(Driver, UnitStepRegion) {
  const GlmObjective obj = glm(ProblemKind::LogLinear, 400, 40, 20);
  MethodConfig c = method(MethodKind::LowRankNewton, 60);
  c.N = 30;
  c.eps_exit = 1e-24;
  c.grad_tol = 1e-10;
  const IterationTrace t = run(obj, Vec::Zero(40), c);
  int checked = 0;
  for (const IterationRecord& r : t.records)
    if (std::isfinite(r.step) && r.decrement <= (1 - 2 * c.line_search.alpha) / 2) {
      EXPECT_EQ(r.step, 1.0) << "k=" << r.k;
      ++checked;
    }
  EXPECT_GT(checked, 0);
}

TEST(Driver, StatusStrings) {
  for (RunStatus s : {RunStatus::Converged, RunStatus::MaxIters, RunStatus::LineSearchFailed,
                      RunStatus::DomainError, RunStatus::NumericalError})
    EXPECT_EQ(run_status_from_string(to_string(s)), s);
  for (MethodKind k : {MethodKind::GD, MethodKind::AGD, MethodKind::Adam, MethodKind::Newton,
                       MethodKind::CubicNewton, MethodKind::NewSamp, MethodKind::LowRankNewton,
                       MethodKind::Sigma, MethodKind::SigmaSVD})
    EXPECT_EQ(method_kind_from_string(to_string(k)), k);
}
