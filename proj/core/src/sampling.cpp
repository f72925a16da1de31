#include "sublevel/sampling.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "sublevel/error.hpp"
#include "sublevel/rng.hpp"

namespace sublevel {

SamplingOperator SamplingOperator::sample(int n, int N, std::uint64_t seed) {
  if (N < 1 || N >= n)
    throw Error(ErrorCode::InvalidCoarseDim,
                "need 1 <= N < n, got N=" + std::to_string(N) + ", n=" + std::to_string(n));
  return SamplingOperator(n, sample_without_replacement(n, N, seed), seed);
}

SamplingOperator SamplingOperator::from_indices(int n, std::vector<int> indices) {
  if (indices.empty() || static_cast<int>(indices.size()) > n)
    throw Error(ErrorCode::InvalidCoarseDim, "index count must lie in [1, n]");
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (int i : indices) {
    if (i < 0 || i >= n) throw Error(ErrorCode::InvalidCoarseDim, "index out of range");
    if (seen[i]) throw Error(ErrorCode::InvalidCoarseDim, "duplicate index");
    seen[i] = 1;
  }
  return SamplingOperator(n, std::move(indices), 0);
}

SamplingOperator SamplingOperator::identity(int n) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  return from_indices(n, std::move(idx));
}

Vec SamplingOperator::restrict(const Vec& v) const {
  if (v.size() != n_) throw Error(ErrorCode::DimensionError, "restrict expects a fine vector");
  Vec w(coarse_dim());
  for (int i = 0; i < coarse_dim(); ++i) w[i] = v[indices_[i]];
  return w;
}

Vec SamplingOperator::prolong(const Vec& w) const {
  if (w.size() != coarse_dim())
    throw Error(ErrorCode::DimensionError, "prolong expects a coarse vector");
  Vec v = Vec::Zero(n_);
  for (int i = 0; i < coarse_dim(); ++i) v[indices_[i]] = w[i];
  return v;
}

Mat SamplingOperator::restrict_rows(const Mat& M) const {
  if (M.rows() != n_) throw Error(ErrorCode::DimensionError, "row count must equal n");
  Mat out(coarse_dim(), M.cols());
  for (int i = 0; i < coarse_dim(); ++i) out.row(i) = M.row(indices_[i]);
  return out;
}

Mat SamplingOperator::prolongation() const {
  Mat P = Mat::Zero(n_, coarse_dim());
  for (int i = 0; i < coarse_dim(); ++i) P(indices_[i], i) = 1.0;
  return P;
}

}  // namespace sublevel
