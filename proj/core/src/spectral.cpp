#include "sublevel/spectral.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "sublevel/error.hpp"

namespace sublevel {

namespace {

Eigenpairs select(const Eigenpairs& e, const std::vector<int>& order, int k) {
  Eigenpairs out;
  out.values.resize(k);
  out.vectors.resize(e.vectors.rows(), k);
  for (int i = 0; i < k; ++i) {
    out.values[i] = e.values[order[i]];
    out.vectors.col(i) = e.vectors.col(order[i]);
  }
  return out;
}

Eigenpairs arrange(const Eigenpairs& e, SpectrumMode order, int k) {
  std::vector<int> idx(e.values.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (order == SpectrumMode::NonConvexTruncated)
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
      return std::abs(e.values[a]) > std::abs(e.values[b]);
    });
  else
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return e.values[a] > e.values[b]; });
  return select(e, idx, k);
}

Mat orthonormalize(const Mat& Y) {
  Eigen::HouseholderQR<Mat> qr(Y);
  return qr.householderQ() * Mat::Identity(Y.rows(), Y.cols());
}

}  // namespace

Eigenpairs dense_symmetric_eig(const Mat& A) {
  if (A.rows() != A.cols()) throw Error(ErrorCode::DimensionError, "matrix must be square");
  if (!A.allFinite()) throw Error(ErrorCode::InvalidMatrix, "non-finite entry");
  Mat S = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::InvalidMatrix, "eigensolver failed");
  Eigenpairs out;
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  return out;
}

Eigenpairs order_by_magnitude(const Eigenpairs& e) {
  return arrange(e, SpectrumMode::NonConvexTruncated, static_cast<int>(e.values.size()));
}

Eigenpairs randomized_eig(const BlockOperator& op, int d, int k, SpectrumMode order,
                          const RandomizedOptions& opts) {
  if (k < 1 || k > d)
    throw Error(ErrorCode::RankTooLarge,
                "requested " + std::to_string(k) + " eigenpairs of a " + std::to_string(d) +
                    "-dimensional operator");
  const int l = k + std::max(0, opts.oversample);
  if (l >= d) {
    Mat A = op(Mat::Identity(d, d));
    return arrange(dense_symmetric_eig(A), order, k);
  }
  std::mt19937_64 gen(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat omega(d, l);
  for (int j = 0; j < l; ++j)
    for (int i = 0; i < d; ++i) omega(i, j) = normal(gen);

  Mat Q = orthonormalize(op(omega));
  for (int it = 0; it < opts.power_iters; ++it) Q = orthonormalize(op(Q));
  Mat B = Q.transpose() * op(Q);
  Eigenpairs small = dense_symmetric_eig(B);
  Eigenpairs lifted{small.values, Q * small.vectors};
  return arrange(lifted, order, k);
}

TruncatedSpectrum::TruncatedSpectrum(Mat U, Vec sigma, double floor, SpectrumMode mode, double nu)
    : U_(std::move(U)), sigma_(std::move(sigma)), floor_(floor), mode_(mode), nu_(nu) {
  if (U_.cols() != sigma_.size())
    throw Error(ErrorCode::DimensionError, "eigenvector/eigenvalue count mismatch");
  if (U_.cols() < 1 || U_.cols() >= U_.rows())
    throw Error(ErrorCode::RankTooLarge, "rank must satisfy 1 <= p < d");
}

Vec TruncatedSpectrum::apply_inverse(const Vec& v) const {
  if (v.size() != U_.rows()) throw Error(ErrorCode::DimensionError, "vector dimension mismatch");
  Vec coef = U_.transpose() * v;
  coef.array() *= sigma_.array().inverse() - 1.0 / floor_;
  return v / floor_ + U_ * coef;
}

Vec TruncatedSpectrum::apply(const Vec& v) const {
  if (v.size() != U_.rows()) throw Error(ErrorCode::DimensionError, "vector dimension mismatch");
  Vec coef = U_.transpose() * v;
  coef.array() *= sigma_.array() - floor_;
  return floor_ * v + U_ * coef;
}

Mat TruncatedSpectrum::dense_inverse() const {
  const Vec scale = sigma_.array().inverse() - 1.0 / floor_;
  return Mat::Identity(dim(), dim()) / floor_ + U_ * scale.asDiagonal() * U_.transpose();
}

Mat TruncatedSpectrum::dense() const {
  const Vec scale = sigma_.array() - floor_;
  return floor_ * Mat::Identity(dim(), dim()) + U_ * scale.asDiagonal() * U_.transpose();
}

TruncatedSpectrum floor_spectrum(const Eigenpairs& raw, int p, SpectrumMode mode, double nu) {
  if (p < 1) throw Error(ErrorCode::RankTooLarge, "rank p must be at least 1");
  if (raw.values.size() < p + 1)
    throw Error(ErrorCode::RankTooLarge, "need p+1 eigenpairs to floor at rank p");
  if (mode == SpectrumMode::Convex) {
    const double floor = raw.values[p];
    if (!(floor > 0.0))
      throw Error(ErrorCode::NotPositiveDefinite,
                  "sigma_{p+1} = " + std::to_string(floor) + " is not positive");
    return TruncatedSpectrum(raw.vectors.leftCols(p), raw.values.head(p), floor, mode, nu);
  }
  if (!(nu > 0.0)) throw Error(ErrorCode::Precondition, "nu must be positive");
  Eigenpairs m = order_by_magnitude(raw);
  Vec sigma = m.values.head(p).unaryExpr([nu](double x) { return truncate_eigenvalue(x, nu); });
  return TruncatedSpectrum(m.vectors.leftCols(p), sigma, truncate_eigenvalue(m.values[p], nu),
                           mode, nu);
}

TruncatedSpectrum randomized_tsvd(const BlockOperator& op, int d, int p, SpectrumMode mode,
                                  const RandomizedOptions& opts, double nu) {
  if (p + 1 > d) throw Error(ErrorCode::RankTooLarge, "p+1 exceeds the dimension");
  return floor_spectrum(randomized_eig(op, d, p + 1, mode, opts), p, mode, nu);
}

TruncatedSpectrum dense_tsvd(const Mat& A, int p, SpectrumMode mode, double nu) {
  if (p + 1 > A.rows()) throw Error(ErrorCode::RankTooLarge, "p+1 exceeds the dimension");
  Eigenpairs e = dense_symmetric_eig(A);
  return floor_spectrum(mode == SpectrumMode::Convex ? e : order_by_magnitude(e), p, mode, nu);
}

BlockOperator dense_operator(const Mat& A) {
  return [A](const Mat& V) -> Mat { return A * V; };
}

LowRankInverse::LowRankInverse(TruncatedSpectrum spectrum, SamplingOperator op)
    : spectrum_(std::move(spectrum)), op_(std::move(op)) {
  if (spectrum_.dim() != op_->coarse_dim())
    throw Error(ErrorCode::DimensionError, "spectrum dimension must equal the coarse dimension");
}

int LowRankInverse::dim() const { return op_ ? op_->fine_dim() : spectrum_.dim(); }

Vec LowRankInverse::apply(const Vec& v) const {
  if (v.size() != dim()) throw Error(ErrorCode::DimensionError, "vector dimension mismatch");
  if (!op_) return spectrum_.apply_inverse(v);
  return op_->prolong(spectrum_.apply_inverse(op_->restrict(v)));
}

}  // namespace sublevel
