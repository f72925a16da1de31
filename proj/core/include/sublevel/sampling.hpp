#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace sublevel {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Prolongation P = selected columns of the identity, restriction R = P^T.
class SamplingOperator {
 public:
  static SamplingOperator sample(int n, int N, std::uint64_t seed);
  // Arbitrary distinct indices; N == n (a permutation) is allowed here.
  static SamplingOperator from_indices(int n, std::vector<int> indices);
  static SamplingOperator identity(int n);

  int fine_dim() const { return n_; }
  int coarse_dim() const { return static_cast<int>(indices_.size()); }
  const std::vector<int>& indices() const { return indices_; }
  std::uint64_t seed() const { return seed_; }

  Vec restrict(const Vec& v) const;
  Vec prolong(const Vec& w) const;
  Mat restrict_rows(const Mat& M) const;
  Mat prolongation() const;
  Mat restriction() const { return prolongation().transpose(); }

 private:
  SamplingOperator(int n, std::vector<int> idx, std::uint64_t seed)
      : n_(n), indices_(std::move(idx)), seed_(seed) {}
  int n_;
  std::vector<int> indices_;
  std::uint64_t seed_;
};

}  // namespace sublevel
