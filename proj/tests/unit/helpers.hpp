#pragma once

#include <random>

#include <Eigen/Dense>

#include "sublevel/problems.hpp"
#include "sublevel/rng.hpp"

namespace testing_support {

using sublevel::Mat;
using sublevel::Vec;

inline Vec gaussian(int n, std::mt19937_64& gen, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = nd(gen);
  return v;
}

inline Mat random_orthogonal(int d, std::mt19937_64& gen) {
  Mat G(d, d);
  std::normal_distribution<double> nd;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) G(i, j) = nd(gen);
  return Eigen::HouseholderQR<Mat>(G).householderQ();
}

inline Mat with_spectrum(const Vec& ev, std::mt19937_64& gen) {
  const Mat Q = random_orthogonal(static_cast<int>(ev.size()), gen);
  return Q * ev.asDiagonal() * Q.transpose();
}

inline sublevel::GlmObjective glm(sublevel::ProblemKind kind, int m, int n, std::uint64_t seed,
                                  double l2 = 0.0) {
  sublevel::SyntheticSpec s;
  s.m = m;
  s.n = n;
  s.seed = seed;
  s.labels_for = kind;
  s.distribution = kind == sublevel::ProblemKind::LogLinear
                       ? sublevel::Distribution::LogLinearFeasible
                       : sublevel::Distribution::GaussianFeatures;
  sublevel::SyntheticData d = sublevel::generate_synthetic(s);
  return sublevel::GlmObjective(kind, std::move(d.A), std::move(d.b), l2);
}

inline double rel(const Vec& a, const Vec& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace testing_support
