#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "sublevel/sampling.hpp"

namespace sublevel {

enum class SpectrumMode { Convex, NonConvexTruncated };

// Eigenpairs in the order requested by the caller (value or magnitude, descending).
struct Eigenpairs {
  Vec values;
  Mat vectors;
};

Eigenpairs dense_symmetric_eig(const Mat& A);

// Reorders by |value| descending, ties kept in input order.
Eigenpairs order_by_magnitude(const Eigenpairs& e);

// Applies a symmetric operator to each column of a block.
using BlockOperator = std::function<Mat(const Mat&)>;

struct RandomizedOptions {
  int oversample = 10;
  int power_iters = 2;
  std::uint64_t seed = 0;
};

// Top-k eigenpairs of a symmetric operator on R^d by randomized subspace iteration.
// Falls back to a dense decomposition of the operator when k + oversample >= d.
Eigenpairs randomized_eig(const BlockOperator& op, int d, int k, SpectrumMode order,
                          const RandomizedOptions& opts);

class TruncatedSpectrum {
 public:
  TruncatedSpectrum(Mat U, Vec sigma, double floor, SpectrumMode mode, double nu);

  const Mat& vectors() const { return U_; }
  const Vec& values() const { return sigma_; }
  double floor() const { return floor_; }
  SpectrumMode mode() const { return mode_; }
  double nu() const { return nu_; }
  int dim() const { return static_cast<int>(U_.rows()); }
  int rank() const { return static_cast<int>(U_.cols()); }

  // sigma_floor^{-1} v + U (Sigma^{-1} - sigma_floor^{-1} I) U^T v
  Vec apply_inverse(const Vec& v) const;
  // sigma_floor v + U (Sigma - sigma_floor I) U^T v
  Vec apply(const Vec& v) const;
  Mat dense_inverse() const;
  Mat dense() const;

 private:
  Mat U_;
  Vec sigma_;
  double floor_;
  SpectrumMode mode_;
  double nu_;
};

inline double truncate_eigenvalue(double x, double nu) { return std::max(std::abs(x), nu); }

// raw must hold at least p+1 pairs; Convex mode expects value order, the other magnitude order.
TruncatedSpectrum floor_spectrum(const Eigenpairs& raw, int p, SpectrumMode mode,
                                 double nu = 1e-10);

TruncatedSpectrum randomized_tsvd(const BlockOperator& op, int d, int p, SpectrumMode mode,
                                  const RandomizedOptions& opts, double nu = 1e-10);

TruncatedSpectrum dense_tsvd(const Mat& A, int p, SpectrumMode mode, double nu = 1e-10);

BlockOperator dense_operator(const Mat& A);

class LowRankInverse {
 public:
  explicit LowRankInverse(TruncatedSpectrum spectrum) : spectrum_(std::move(spectrum)) {}
  LowRankInverse(TruncatedSpectrum spectrum, SamplingOperator op);

  const TruncatedSpectrum& spectrum() const { return spectrum_; }
  bool coarse() const { return op_.has_value(); }
  const std::optional<SamplingOperator>& sampling() const { return op_; }
  int dim() const;

  Vec apply(const Vec& v) const;

 private:
  TruncatedSpectrum spectrum_;
  std::optional<SamplingOperator> op_;
};

}  // namespace sublevel
