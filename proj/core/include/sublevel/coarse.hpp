#pragma once

#include "sublevel/problems.hpp"
#include "sublevel/sampling.hpp"

namespace sublevel {

// F(y) = <R grad f(x_k), y - y0> + 0.5 <R hess f(x_k) P (y - y0), y - y0>
class GalerkinModel {
 public:
  GalerkinModel(Vec anchor, Vec reduced_gradient, Mat reduced_hessian, Vec y0);

  const Vec& anchor() const { return anchor_; }
  const Vec& reduced_gradient() const { return grad_; }
  const Mat& reduced_hessian() const { return hess_; }
  const Vec& y0() const { return y0_; }
  int coarse_dim() const { return static_cast<int>(grad_.size()); }

  double value(const Vec& y) const;
  Vec gradient(const Vec& y) const;
  const Mat& hessian() const { return hess_; }

 private:
  Vec anchor_;
  Vec grad_;
  Mat hess_;
  Vec y0_;
};

GalerkinModel build_galerkin(const Objective& obj, const Vec& x, const SamplingOperator& op);
GalerkinModel build_galerkin(const Objective& obj, const Vec& x, const Vec& grad,
                             const SamplingOperator& op);

struct CoherencyReport {
  double first_order = 0.0;
  double second_order = 0.0;
  bool holds(double tol1 = 1e-12, double tol2 = 1e-10) const {
    return first_order <= tol1 && second_order <= tol2;
  }
};

CoherencyReport check_coherency(const GalerkinModel& model, const Objective& obj,
                                const SamplingOperator& op, const Vec& x);

}  // namespace sublevel
