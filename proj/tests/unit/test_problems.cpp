#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "sublevel/error.hpp"
#include "sublevel/problems.hpp"

using namespace sublevel;
using namespace testing_support;

namespace {

Vec fd_gradient(const Objective& obj, const Vec& x) {
  Vec g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * (1 + std::abs(x(i)));
    Vec xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (obj.value(xp) - obj.value(xm)) / (2 * h);
  }
  return g;
}

}  // namespace

TEST(Values, NlsAtZero) {
  const GlmObjective obj = glm(ProblemKind::NonlinearLeastSquares, 50, 5, 1);
  const Vec& b = obj.labels();
  EXPECT_NEAR(obj.value(Vec::Zero(5)), (b.array() - 0.5).square().mean(), 1e-15);
}

TEST(Values, LogisticAtZero) {
  const GlmObjective obj = glm(ProblemKind::Logistic, 50, 5, 2);
  EXPECT_NEAR(obj.value(Vec::Zero(5)), std::log(2.0), 1e-15);
}

TEST(Values, LogLinearZeroRows) {
  const GlmObjective obj(ProblemKind::LogLinear, Mat::Zero(2, 3), Vec::Constant(2, 2.0));
  EXPECT_NEAR(obj.value(Vec::Ones(3)), -2 * std::log(2.0), 1e-15);
}

TEST(Values, LogLinearOutsideDomain) {
  Mat A(1, 1);
  A << 1;
  const GlmObjective obj(ProblemKind::LogLinear, A, Vec::Ones(1));
  EXPECT_FALSE(obj.in_domain(Vec::Constant(1, 2.0)));
  try {
    obj.value(Vec::Constant(1, 2.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DomainViolation);
  }
  EXPECT_THROW(obj.gradient(Vec::Constant(1, 1.0)), Error);
}

TEST(Values, SigmoidStable) {
  EXPECT_DOUBLE_EQ(sigmoid(0), 0.5);
  EXPECT_EQ(sigmoid(-800), 0.0);
  EXPECT_EQ(sigmoid(800), 1.0);
  EXPECT_NEAR(sigmoid(2) + sigmoid(-2), 1.0, 2.3e-16);
}

TEST(Values, LogisticLargeMarginsFinite) {
  const GlmObjective obj = glm(ProblemKind::Logistic, 40, 4, 3);
  const double f = obj.value(Vec::Constant(4, 500.0));
  EXPECT_TRUE(std::isfinite(f));
}

TEST(Derivatives, QuadraticAdapter) {
  const QuadraticObjective q = QuadraticObjective::half_norm(5);
  std::mt19937_64 gen(4);
  const Vec x = gaussian(5, gen), v = gaussian(5, gen);
  EXPECT_EQ(q.gradient(x), x);
  EXPECT_EQ(q.hessian_vec(x, v), v);
}

TEST(Derivatives, SvmInactiveHinge) {
  Mat A = Mat::Identity(3, 3);
  const Vec b = Vec::Ones(3);
  const GlmObjective obj(ProblemKind::SvmHinge2, A, b, 0.5);
  const Vec x = Vec::Constant(3, 2.0);  // margins 2 > 1: nothing active
  EXPECT_LE((obj.dense_hessian(x) - Mat::Identity(3, 3)).norm(), 1e-15);
  EXPECT_LE((obj.gradient(x) - x).norm(), 1e-15);
}

TEST(Derivatives, FiniteDifferencesAllKinds) {
  for (ProblemKind kind : {ProblemKind::NonlinearLeastSquares, ProblemKind::LogLinear,
                           ProblemKind::Logistic, ProblemKind::SvmHinge2}) {
    for (int s = 0; s < 20; ++s) {
      const GlmObjective obj = glm(kind, 100, 10, 100 * static_cast<int>(kind) + s,
                                   kind == ProblemKind::Logistic ? 1e-2 : kind == ProblemKind::SvmHinge2 ? 0.3 : 0.0);
      std::mt19937_64 gen(s);
      const Vec x = gaussian(10, gen, 0.1);
      ASSERT_TRUE(obj.in_domain(x));
      const Vec g = obj.gradient(x);
      const Vec fd = fd_gradient(obj, x);
      EXPECT_LE((g - fd).cwiseAbs().maxCoeff() / std::max(1.0, g.cwiseAbs().maxCoeff()), 1e-5)
          << to_string(kind) << " seed " << s;
      const Vec v = gaussian(10, gen);
      EXPECT_LE(rel(obj.hessian_vec(x, v), obj.dense_hessian(x) * v), 1e-8);
      // Hessian against finite differences of the gradient, away from hinge kinks
      if (kind != ProblemKind::SvmHinge2) {
        const double h = 1e-6;
        const Vec hv = (obj.gradient(x + h * v) - obj.gradient(x - h * v)) / (2 * h);
        EXPECT_LE(rel(obj.hessian_vec(x, v), hv), 1e-5);
      }
    }
  }
}

TEST(Derivatives, ReducedHessianIsSubmatrix) {
  const GlmObjective obj = glm(ProblemKind::Logistic, 120, 25, 9, 1e-2);
  std::mt19937_64 gen(9);
  const Vec x = gaussian(25, gen, 0.2);
  const SamplingOperator op = SamplingOperator::sample(25, 9, 9);
  const Mat H = obj.dense_hessian(x);
  const Mat Hr = obj.reduced_hessian(x, op);
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) EXPECT_NEAR(Hr(i, j), H(op.indices()[i], op.indices()[j]), 1e-12);
}

TEST(Derivatives, HessianBlockMatchesColumns) {
  const GlmObjective obj = glm(ProblemKind::NonlinearLeastSquares, 80, 12, 10);
  std::mt19937_64 gen(10);
  const Vec x = gaussian(12, gen, 0.3);
  Mat V(12, 3);
  for (int j = 0; j < 3; ++j) V.col(j) = gaussian(12, gen);
  const Mat B = obj.hessian_block(V, x);
  for (int j = 0; j < 3; ++j) EXPECT_LE(rel(B.col(j), obj.hessian_vec(x, V.col(j))), 1e-12);
}

TEST(Derivatives, DenseCap) {
  GlmObjective obj = glm(ProblemKind::Logistic, 20, 10, 11);
  obj.dense_cap = 5;
  try {
    obj.dense_hessian(Vec::Zero(10));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CapExceeded);
  }
}

TEST(Derivatives, DeltaMatchesValueDifference) {
  for (ProblemKind kind : {ProblemKind::NonlinearLeastSquares, ProblemKind::LogLinear,
                           ProblemKind::Logistic, ProblemKind::SvmHinge2}) {
    const GlmObjective obj = glm(kind, 60, 8, 12, 0.1);
    std::mt19937_64 gen(12);
    const Vec x = gaussian(8, gen, 0.1), d = gaussian(8, gen, 0.1);
    for (double t : {1.0, 0.3, 1e-3}) {
      const double ref = obj.value(x + t * d) - obj.value(x);
      EXPECT_NEAR(obj.delta(x, d, t), ref, 1e-12 * (1 + std::abs(obj.value(x)))) << to_string(kind);
    }
  }
}

TEST(Derivatives, DeltaResolvesTinySteps) {
  // f is large in magnitude while the decrease is far below its last bit
  const GlmObjective obj = glm(ProblemKind::LogLinear, 500, 20, 13);
  std::mt19937_64 gen(13);
  const Vec x = Vec::Zero(20);
  const Vec g = obj.gradient(x);
  const Vec d = -1e-9 * g / g.norm();
  const double dl = obj.delta(x, d, 1.0);
  const double first_order = g.dot(d);
  EXPECT_LT(dl, 0.0);
  EXPECT_NEAR(dl / first_order, 1.0, 1e-5);
}

TEST(Convexity, LogisticAndSvmShifted) {
  const double l2 = 0.05;
  const GlmObjective lg = glm(ProblemKind::Logistic, 100, 15, 14, l2);
  const GlmObjective sv = glm(ProblemKind::SvmHinge2, 100, 15, 14, l2);
  std::mt19937_64 gen(14);
  const Vec x = gaussian(15, gen, 0.3);
  Eigen::SelfAdjointEigenSolver<Mat> a(lg.dense_hessian(x)), b(sv.dense_hessian(x));
  EXPECT_GE(a.eigenvalues()(0), l2 * (1 - 1e-8));
  EXPECT_GE(b.eigenvalues()(0), 1 - 1e-8);
}

TEST(Convexity, LogLinearPositiveDefinite) {
  const GlmObjective obj = glm(ProblemKind::LogLinear, 100, 15, 15);
  std::mt19937_64 gen(15);
  const Vec x = gaussian(15, gen, 0.05);
  ASSERT_TRUE(obj.in_domain(x));
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<Mat>(obj.dense_hessian(x)).eigenvalues()(0), 0.0);
}

TEST(Convexity, NlsIndefiniteAwayFromOrigin) {
  SyntheticSpec s;
  s.m = 400;
  s.n = 100;
  s.seed = 16;
  s.distribution = Distribution::SaddlePlateau;
  s.labels_for = ProblemKind::NonlinearLeastSquares;
  SyntheticData d = generate_synthetic(s);
  const GlmObjective obj(ProblemKind::NonlinearLeastSquares, d.A, d.b);
  // at the origin the curvature is (1/8m) A^T A, positive semidefinite
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Mat>(obj.dense_hessian(Vec::Zero(100))).eigenvalues()(0), -1e-12);
  // along a key coordinate the sigmoid enters its concave regime and curvature turns negative
  Vec x = Vec::Zero(100);
  x(d.key_coordinates.front()) = 3.0;
  const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(obj.dense_hessian(x)).eigenvalues();
  EXPECT_LT(ev(0), 0.0);
  EXPECT_GT(ev(99), 0.0);
}

TEST(Synthetic, Deterministic) {
  SyntheticSpec s;
  s.m = 30;
  s.n = 7;
  s.seed = 17;
  const SyntheticData a = generate_synthetic(s), b = generate_synthetic(s);
  EXPECT_EQ(a.A, b.A);
  EXPECT_EQ(a.b, b.b);
  s.seed = 18;
  EXPECT_NE(generate_synthetic(s).A, a.A);
}

TEST(Synthetic, LogLinearFeasible) {
  SyntheticSpec s;
  s.m = 500;
  s.n = 20;
  s.seed = 19;
  s.distribution = Distribution::LogLinearFeasible;
  const SyntheticData d = generate_synthetic(s);
  EXPECT_GT(d.b.minCoeff(), 0.0);
}

TEST(Synthetic, GaussianColumnMeans) {
  SyntheticSpec s;
  s.m = 10000;
  s.n = 1000;
  s.seed = 20;
  const SyntheticData d = generate_synthetic(s);
  EXPECT_LE(d.A.colwise().mean().cwiseAbs().maxCoeff(), 4.0 / std::sqrt(10000.0));
}

TEST(Synthetic, LabelConventions) {
  const GlmObjective lg = glm(ProblemKind::Logistic, 200, 5, 21);
  for (int i = 0; i < 200; ++i) EXPECT_TRUE(lg.labels()(i) == 1.0 || lg.labels()(i) == -1.0);
  const GlmObjective nls = glm(ProblemKind::NonlinearLeastSquares, 200, 5, 21);
  EXPECT_GE(nls.labels().minCoeff(), 0.0);
  EXPECT_LE(nls.labels().maxCoeff(), 1.0);
}

TEST(Synthetic, SubsampledHessianFullRowsIsExact) {
  const GlmObjective obj = glm(ProblemKind::Logistic, 50, 6, 22, 0.01);
  std::vector<int> all(50);
  std::iota(all.begin(), all.end(), 0);
  const Vec x = Vec::Constant(6, 0.1);
  EXPECT_LE((obj.subsampled_hessian(x, all) - obj.dense_hessian(x)).norm(), 1e-13);
}
