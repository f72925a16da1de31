#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sublevel/sampling.hpp"

namespace sublevel {

enum class ProblemKind { NonlinearLeastSquares, LogLinear, Logistic, SvmHinge2, Quadratic };

const char* to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(const std::string& s);

struct Capabilities {
  bool dense_hessian_ok = true;
  bool reduced_hessian_ok = true;
  bool domain_restricted = false;
  bool row_structure = false;
};

class Objective {
 public:
  virtual ~Objective() = default;

  virtual ProblemKind kind() const = 0;
  virtual int dim() const = 0;
  virtual Capabilities capabilities() const = 0;

  virtual bool in_domain(const Vec& x) const = 0;
  virtual double value(const Vec& x) const = 0;
  virtual Vec gradient(const Vec& x) const = 0;
  virtual Vec hessian_vec(const Vec& x, const Vec& v) const = 0;
  virtual Mat hessian_block(const Mat& V, const Vec& x) const;
  virtual Mat dense_hessian(const Vec& x) const = 0;
  virtual Mat reduced_hessian(const Vec& x, const SamplingOperator& op) const = 0;

  // f(x + t d) - f(x), evaluated without cancellation against the magnitude of f where possible.
  virtual double delta(const Vec& x, const Vec& d, double t) const;

  // Hessian estimated from a subset of data rows (NewSamp). Only for row-structured objectives.
  virtual int rows() const { return 0; }
  virtual Mat subsampled_hessian(const Vec& x, const std::vector<int>& rows) const;

  std::size_t dense_cap = 2000;
};

// f(x) = c * sum_i psi_i(a_i^T x) + (r/2) ||x||^2
class GlmObjective : public Objective {
 public:
  GlmObjective(ProblemKind kind, Mat A, Vec b, double l2 = 0.0);

  ProblemKind kind() const override { return kind_; }
  int dim() const override { return static_cast<int>(A_.cols()); }
  Capabilities capabilities() const override;

  bool in_domain(const Vec& x) const override;
  double value(const Vec& x) const override;
  Vec gradient(const Vec& x) const override;
  Vec hessian_vec(const Vec& x, const Vec& v) const override;
  Mat hessian_block(const Mat& V, const Vec& x) const override;
  Mat dense_hessian(const Vec& x) const override;
  Mat reduced_hessian(const Vec& x, const SamplingOperator& op) const override;
  double delta(const Vec& x, const Vec& d, double t) const override;
  int rows() const override { return static_cast<int>(A_.rows()); }
  Mat subsampled_hessian(const Vec& x, const std::vector<int>& rows) const override;

  const Mat& features() const { return A_; }
  const Vec& labels() const { return b_; }
  double l2() const { return l2_; }
  double loss_scale() const { return c_; }
  double ridge() const { return r_; }

  // Per-sample second derivative weights D(x) so that the Hessian is c A^T D A + r I.
  Vec curvature_weights(const Vec& x) const;

 private:
  Vec margins(const Vec& x) const;
  void check_domain(const Vec& z) const;
  Vec first_derivs(const Vec& z) const;

  ProblemKind kind_;
  Mat A_;
  Vec b_;
  double l2_;
  double c_;
  double r_;
};

// f(x) = 0.5 x^T H x - c^T x
class QuadraticObjective : public Objective {
 public:
  QuadraticObjective(Mat H, Vec c);
  static QuadraticObjective half_norm(int n);

  ProblemKind kind() const override { return ProblemKind::Quadratic; }
  int dim() const override { return static_cast<int>(H_.rows()); }
  Capabilities capabilities() const override { return {}; }

  bool in_domain(const Vec&) const override { return true; }
  double value(const Vec& x) const override;
  Vec gradient(const Vec& x) const override;
  Vec hessian_vec(const Vec& x, const Vec& v) const override;
  Mat dense_hessian(const Vec& x) const override;
  Mat reduced_hessian(const Vec& x, const SamplingOperator& op) const override;
  double delta(const Vec& x, const Vec& d, double t) const override;

 private:
  Mat H_;
  Vec c_;
};

double sigmoid(double w);

enum class Distribution { GaussianFeatures, LogLinearFeasible, SaddlePlateau };

const char* to_string(Distribution d);
Distribution distribution_from_string(const std::string& s);

struct SyntheticSpec {
  int m = 100;
  int n = 10;
  Distribution distribution = Distribution::GaussianFeatures;
  std::uint64_t seed = 0;
  ProblemKind labels_for = ProblemKind::Logistic;
  // LogLinearFeasible: b_i = sqrt(n) * U(b_low, b_high), so x = 0 sits at distance
  // roughly U(b_low, b_high) from every constraint hyperplane.
  double b_low = 1.0;
  double b_high = 2.0;
  // SaddlePlateau
  int key_coordinates = 8;
};

struct SyntheticData {
  Mat A;
  Vec b;
  std::vector<int> key_coordinates;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace sublevel
