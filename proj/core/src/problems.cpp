#include "sublevel/problems.hpp"

#include <cmath>
#include <random>
#include <string>

#include "sublevel/error.hpp"
#include "sublevel/rng.hpp"

namespace sublevel {

const char* to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::NonlinearLeastSquares: return "nls";
    case ProblemKind::LogLinear: return "loglinear";
    case ProblemKind::Logistic: return "logistic";
    case ProblemKind::SvmHinge2: return "svm";
    case ProblemKind::Quadratic: return "quadratic";
  }
  return "unknown";
}

ProblemKind problem_kind_from_string(const std::string& s) {
  if (s == "nls") return ProblemKind::NonlinearLeastSquares;
  if (s == "loglinear") return ProblemKind::LogLinear;
  if (s == "logistic") return ProblemKind::Logistic;
  if (s == "svm") return ProblemKind::SvmHinge2;
  if (s == "quadratic") return ProblemKind::Quadratic;
  throw Error(ErrorCode::ConfigError, "unknown problem kind '" + s + "'");
}

const char* to_string(Distribution d) {
  switch (d) {
    case Distribution::GaussianFeatures: return "gaussian";
    case Distribution::LogLinearFeasible: return "loglinear_feasible";
    case Distribution::SaddlePlateau: return "saddle_plateau";
  }
  return "unknown";
}

Distribution distribution_from_string(const std::string& s) {
  if (s == "gaussian") return Distribution::GaussianFeatures;
  if (s == "loglinear_feasible") return Distribution::LogLinearFeasible;
  if (s == "saddle_plateau") return Distribution::SaddlePlateau;
  throw Error(ErrorCode::ConfigError, "unknown distribution '" + s + "'");
}

double sigmoid(double w) {
  if (w >= 0) return 1.0 / (1.0 + std::exp(-w));
  const double e = std::exp(w);
  return e / (1.0 + e);
}

namespace {

double softplus(double u) { return u > 0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u)); }

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, what);
}

}  // namespace

Mat Objective::hessian_block(const Mat& V, const Vec& x) const {
  Mat out(V.rows(), V.cols());
  for (Eigen::Index j = 0; j < V.cols(); ++j) out.col(j) = hessian_vec(x, V.col(j));
  return out;
}

double Objective::delta(const Vec& x, const Vec& d, double t) const {
  Vec y = x + t * d;
  if (!in_domain(y)) throw Error(ErrorCode::DomainViolation, "trial point outside the domain");
  return value(y) - value(x);
}

Mat Objective::subsampled_hessian(const Vec&, const std::vector<int>&) const {
  throw Error(ErrorCode::Precondition, "objective has no row structure");
}

GlmObjective::GlmObjective(ProblemKind kind, Mat A, Vec b, double l2)
    : kind_(kind), A_(std::move(A)), b_(std::move(b)), l2_(l2) {
  if (A_.rows() != b_.size()) throw Error(ErrorCode::DimensionError, "A rows must match b");
  if (A_.rows() < 1 || A_.cols() < 1) throw Error(ErrorCode::DimensionError, "empty data");
  if (!A_.allFinite() || !b_.allFinite()) throw Error(ErrorCode::NonFinite, "data not finite");
  if (l2_ < 0) throw Error(ErrorCode::Precondition, "l2 must be non-negative");
  const double m = static_cast<double>(A_.rows());
  switch (kind_) {
    case ProblemKind::NonlinearLeastSquares: c_ = 1.0 / m; r_ = 0.0; break;
    case ProblemKind::LogLinear: c_ = 1.0; r_ = 0.0; break;
    case ProblemKind::Logistic: c_ = 1.0 / m; r_ = l2_; break;
    case ProblemKind::SvmHinge2: c_ = l2_; r_ = 1.0; break;
    default: throw Error(ErrorCode::Precondition, "not a GLM-structured kind");
  }
}

Capabilities GlmObjective::capabilities() const {
  Capabilities c;
  c.dense_hessian_ok = static_cast<std::size_t>(dim()) <= dense_cap;
  c.domain_restricted = kind_ == ProblemKind::LogLinear;
  c.row_structure = true;
  return c;
}

Vec GlmObjective::margins(const Vec& x) const {
  if (x.size() != dim()) throw Error(ErrorCode::DimensionError, "x has the wrong dimension");
  return A_ * x;
}

void GlmObjective::check_domain(const Vec& z) const {
  if (kind_ != ProblemKind::LogLinear) return;
  for (Eigen::Index i = 0; i < z.size(); ++i)
    if (!(b_[i] - z[i] > 0.0))
      throw Error(ErrorCode::DomainViolation, "b_i - a_i^T x <= 0 at row " + std::to_string(i));
}

bool GlmObjective::in_domain(const Vec& x) const {
  if (x.size() != dim() || !x.allFinite()) return false;
  if (kind_ != ProblemKind::LogLinear) return true;
  return ((b_ - A_ * x).array() > 0.0).all();
}

double GlmObjective::value(const Vec& x) const {
  const Vec z = margins(x);
  check_domain(z);
  double s = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double b = b_[i];
    switch (kind_) {
      case ProblemKind::NonlinearLeastSquares: {
        const double r = b - sigmoid(z[i]);
        s += r * r;
        break;
      }
      case ProblemKind::LogLinear: s -= std::log(b - z[i]); break;
      case ProblemKind::Logistic: s += softplus(-b * z[i]); break;
      case ProblemKind::SvmHinge2: {
        const double h = std::max(0.0, 1.0 - b * z[i]);
        s += 0.5 * h * h;
        break;
      }
      default: break;
    }
  }
  const double v = c_ * s + 0.5 * r_ * x.squaredNorm();
  require_finite(v, "objective value overflow");
  return v;
}

Vec GlmObjective::first_derivs(const Vec& z) const {
  Vec g(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double b = b_[i];
    switch (kind_) {
      case ProblemKind::NonlinearLeastSquares: {
        const double ph = sigmoid(z[i]);
        g[i] = -2.0 * (b - ph) * ph * (1.0 - ph);
        break;
      }
      case ProblemKind::LogLinear: g[i] = 1.0 / (b - z[i]); break;
      case ProblemKind::Logistic: g[i] = -b * sigmoid(-b * z[i]); break;
      case ProblemKind::SvmHinge2: g[i] = -b * std::max(0.0, 1.0 - b * z[i]); break;
      default: g[i] = 0.0;
    }
  }
  return g;
}

Vec GlmObjective::curvature_weights(const Vec& x) const {
  const Vec z = margins(x);
  check_domain(z);
  Vec D(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double b = b_[i];
    switch (kind_) {
      case ProblemKind::NonlinearLeastSquares: {
        const double ph = sigmoid(z[i]);
        const double d1 = ph * (1.0 - ph);
        const double d2 = d1 * (1.0 - 2.0 * ph);
        D[i] = 2.0 * d1 * d1 - 2.0 * (b - ph) * d2;
        break;
      }
      case ProblemKind::LogLinear: {
        const double s = b - z[i];
        D[i] = 1.0 / (s * s);
        break;
      }
      case ProblemKind::Logistic: {
        const double q = sigmoid(b * z[i]);
        D[i] = b * b * q * (1.0 - q);
        break;
      }
      case ProblemKind::SvmHinge2: D[i] = 1.0 - b * z[i] > 0.0 ? b * b : 0.0; break;
      default: D[i] = 0.0;
    }
  }
  return D;
}

Vec GlmObjective::gradient(const Vec& x) const {
  const Vec z = margins(x);
  check_domain(z);
  Vec g = c_ * (A_.transpose() * first_derivs(z));
  if (r_ != 0.0) g += r_ * x;
  if (!g.allFinite()) throw Error(ErrorCode::NonFinite, "gradient overflow");
  return g;
}

Vec GlmObjective::hessian_vec(const Vec& x, const Vec& v) const {
  if (v.size() != dim()) throw Error(ErrorCode::DimensionError, "v has the wrong dimension");
  const Vec D = curvature_weights(x);
  Vec out = c_ * (A_.transpose() * (D.cwiseProduct(A_ * v)));
  if (r_ != 0.0) out += r_ * v;
  return out;
}

Mat GlmObjective::hessian_block(const Mat& V, const Vec& x) const {
  if (V.rows() != dim()) throw Error(ErrorCode::DimensionError, "block has the wrong row count");
  const Vec D = curvature_weights(x);
  Mat out = c_ * (A_.transpose() * (D.asDiagonal() * (A_ * V)));
  if (r_ != 0.0) out += r_ * V;
  return out;
}

Mat GlmObjective::dense_hessian(const Vec& x) const {
  if (static_cast<std::size_t>(dim()) > dense_cap)
    throw Error(ErrorCode::CapExceeded, "dense Hessian of dimension " + std::to_string(dim()) +
                                            " exceeds cap " + std::to_string(dense_cap));
  const Vec D = curvature_weights(x);
  Mat H = c_ * (A_.transpose() * (D.asDiagonal() * A_));
  H = 0.5 * (H + H.transpose()).eval();
  H.diagonal().array() += r_;
  return H;
}

Mat GlmObjective::reduced_hessian(const Vec& x, const SamplingOperator& op) const {
  if (op.fine_dim() != dim()) throw Error(ErrorCode::DimensionError, "operator dimension");
  const Vec D = curvature_weights(x);
  const int N = op.coarse_dim();
  Mat As(A_.rows(), N);
  for (int j = 0; j < N; ++j) As.col(j) = A_.col(op.indices()[j]);
  Mat H = c_ * (As.transpose() * (D.asDiagonal() * As));
  H = 0.5 * (H + H.transpose()).eval();
  H.diagonal().array() += r_;
  return H;
}

Mat GlmObjective::subsampled_hessian(const Vec& x, const std::vector<int>& rows) const {
  if (rows.empty()) throw Error(ErrorCode::Precondition, "empty row sample");
  const Vec D = curvature_weights(x);
  const int s = static_cast<int>(rows.size());
  Mat Ar(s, dim());
  Vec Dr(s);
  for (int i = 0; i < s; ++i) {
    Ar.row(i) = A_.row(rows[i]);
    Dr[i] = D[rows[i]];
  }
  const double scale = c_ * static_cast<double>(A_.rows()) / s;
  Mat H = scale * (Ar.transpose() * (Dr.asDiagonal() * Ar));
  H = 0.5 * (H + H.transpose()).eval();
  H.diagonal().array() += r_;
  return H;
}

double GlmObjective::delta(const Vec& x, const Vec& d, double t) const {
  const Vec z = margins(x);
  const Vec w = t * (A_ * d);
  double s = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double b = b_[i];
    switch (kind_) {
      case ProblemKind::NonlinearLeastSquares: {
        const double p0 = sigmoid(z[i]);
        const double p1 = sigmoid(z[i] + w[i]);
        // sigma(a) - sigma(b) = -sigma(a) sigma(-b) expm1(b - a)
        const double diff = sigmoid(z[i] + w[i]) * sigmoid(-z[i]) * -std::expm1(-w[i]);
        s += -diff * (2.0 * b - p0 - p1);
        break;
      }
      case ProblemKind::LogLinear: {
        const double slack = b - z[i];
        if (!(slack > 0.0)) throw Error(ErrorCode::DomainViolation, "base point outside domain");
        const double ratio = w[i] / slack;
        if (!(ratio < 1.0))
          throw Error(ErrorCode::DomainViolation, "trial point outside the domain");
        s -= std::log1p(-ratio);
        break;
      }
      case ProblemKind::Logistic: {
        const double u = -b * z[i];
        const double du = -b * w[i];
        if (std::abs(du) <= 30.0)
          s += std::log1p(sigmoid(u) * std::expm1(du));
        else
          s += softplus(u + du) - softplus(u);
        break;
      }
      case ProblemKind::SvmHinge2: {
        const double h0 = std::max(0.0, 1.0 - b * z[i]);
        const double h1 = std::max(0.0, 1.0 - b * (z[i] + w[i]));
        s += 0.5 * (h1 - h0) * (h1 + h0);
        break;
      }
      default: break;
    }
  }
  double out = c_ * s;
  if (r_ != 0.0) out += r_ * (t * x.dot(d) + 0.5 * t * t * d.squaredNorm());
  require_finite(out, "objective difference overflow");
  return out;
}

QuadraticObjective::QuadraticObjective(Mat H, Vec c) : H_(std::move(H)), c_(std::move(c)) {
  if (H_.rows() != H_.cols() || H_.rows() != c_.size())
    throw Error(ErrorCode::DimensionError, "quadratic data shapes disagree");
  H_ = 0.5 * (H_ + H_.transpose()).eval();
}

QuadraticObjective QuadraticObjective::half_norm(int n) {
  return QuadraticObjective(Mat::Identity(n, n), Vec::Zero(n));
}

double QuadraticObjective::value(const Vec& x) const { return 0.5 * x.dot(H_ * x) - c_.dot(x); }
Vec QuadraticObjective::gradient(const Vec& x) const { return H_ * x - c_; }
Vec QuadraticObjective::hessian_vec(const Vec&, const Vec& v) const { return H_ * v; }
Mat QuadraticObjective::dense_hessian(const Vec&) const { return H_; }

Mat QuadraticObjective::reduced_hessian(const Vec&, const SamplingOperator& op) const {
  const int N = op.coarse_dim();
  Mat H(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) H(i, j) = H_(op.indices()[i], op.indices()[j]);
  return H;
}

double QuadraticObjective::delta(const Vec& x, const Vec& d, double t) const {
  return t * gradient(x).dot(d) + 0.5 * t * t * d.dot(H_ * d);
}

namespace {

Mat gaussian_matrix(int m, int n, std::mt19937_64& gen) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat A(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = normal(gen);
  return A;
}

SyntheticData saddle_plateau(const SyntheticSpec& spec, std::mt19937_64& gen) {
  const int m = spec.m, n = spec.n, K = spec.key_coordinates;
  if (K < 1 || K >= n) throw Error(ErrorCode::Precondition, "key coordinate count must be in [1, n)");
  constexpr double kAlpha = 0.02;
  constexpr double kBulkScale = 1e-3;
  constexpr double kBulkLoss = 1e-3;
  constexpr double kKeyLabel = 0.9;

  SyntheticData out;
  out.A = Mat::Zero(m, n);
  out.b = Vec::Zero(m);
  out.key_coordinates = sample_without_replacement(n, K, gen());

  int key_rows = (m / 4) & ~1;
  const int bulk_rows = m - key_rows;
  for (int j = 0; j < K; ++j) {
    const double s = 0.3 * (1 + j % 4) * ((j / 4) % 2 ? -1.0 : 1.0);
    const int col = out.key_coordinates[j];
    for (int i = 0; i < key_rows; ++i) out.A(i, col) = kAlpha + s * (i % 2 ? -1.0 : 1.0);
  }
  out.b.head(key_rows).setConstant(kKeyLabel);

  std::vector<int> bulk;
  for (int c = 0, j = 0; c < n; ++c) {
    if (j < K && out.key_coordinates[j] == c) {
      ++j;
      continue;
    }
    bulk.push_back(c);
  }
  const double delta = bulk_rows > 0 ? std::sqrt(kBulkLoss * m / bulk_rows) : 0.0;
  std::normal_distribution<double> normal(0.0, kBulkScale);
  std::bernoulli_distribution coin(0.5);
  const int pairs = bulk_rows / 2;
  for (int r = 0; r < pairs; ++r) {
    const int i = key_rows + 2 * r;
    for (int c : bulk) {
      const double v = normal(gen);
      out.A(i, c) = v;
      out.A(i + 1, c) = -v;
    }
    const double label = 0.5 + (coin(gen) ? delta : -delta);
    out.b[i] = label;
    out.b[i + 1] = label;
  }
  if (bulk_rows % 2) out.b[m - 1] = 0.5;
  return out;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.m < 1 || spec.n < 1) throw Error(ErrorCode::Precondition, "m and n must be positive");
  std::mt19937_64 gen(spec.seed);
  switch (spec.distribution) {
    case Distribution::SaddlePlateau: return saddle_plateau(spec, gen);
    case Distribution::LogLinearFeasible: {
      if (!(spec.b_low > 0.0) || !(spec.b_high > spec.b_low))
        throw Error(ErrorCode::Precondition, "need 0 < b_low < b_high");
      SyntheticData out;
      out.A = gaussian_matrix(spec.m, spec.n, gen);
      std::uniform_real_distribution<double> unif(spec.b_low, spec.b_high);
      out.b.resize(spec.m);
      const double scale = std::sqrt(static_cast<double>(spec.n));
      for (int i = 0; i < spec.m; ++i) out.b[i] = scale * unif(gen);
      return out;
    }
    case Distribution::GaussianFeatures: {
      SyntheticData out;
      out.A = gaussian_matrix(spec.m, spec.n, gen);
      std::normal_distribution<double> normal(0.0, 1.0);
      Vec truth(spec.n);
      for (int j = 0; j < spec.n; ++j) truth[j] = normal(gen) / std::sqrt(double(spec.n));
      Vec z = out.A * truth;
      out.b.resize(spec.m);
      for (int i = 0; i < spec.m; ++i) {
        const double noisy = z[i] + 0.5 * normal(gen);
        switch (spec.labels_for) {
          case ProblemKind::NonlinearLeastSquares: out.b[i] = sigmoid(noisy); break;
          case ProblemKind::LogLinear:
            out.b[i] = std::sqrt(double(spec.n)) * (1.0 + std::abs(noisy));
            break;
          default: out.b[i] = noisy >= 0 ? 1.0 : -1.0;
        }
      }
      return out;
    }
  }
  return {};
}

}  // namespace sublevel
