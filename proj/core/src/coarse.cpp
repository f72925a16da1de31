#include "sublevel/coarse.hpp"

#include "sublevel/error.hpp"

namespace sublevel {

GalerkinModel::GalerkinModel(Vec anchor, Vec reduced_gradient, Mat reduced_hessian, Vec y0)
    : anchor_(std::move(anchor)),
      grad_(std::move(reduced_gradient)),
      hess_(std::move(reduced_hessian)),
      y0_(std::move(y0)) {
  if (hess_.rows() != grad_.size() || hess_.cols() != grad_.size() || y0_.size() != grad_.size())
    throw Error(ErrorCode::DimensionError, "Galerkin model pieces disagree in size");
}

double GalerkinModel::value(const Vec& y) const {
  const Vec s = y - y0_;
  return grad_.dot(s) + 0.5 * s.dot(hess_ * s);
}

Vec GalerkinModel::gradient(const Vec& y) const { return grad_ + hess_ * (y - y0_); }

GalerkinModel build_galerkin(const Objective& obj, const Vec& x, const Vec& grad,
                             const SamplingOperator& op) {
  if (!obj.capabilities().reduced_hessian_ok)
    throw Error(ErrorCode::Precondition, "objective cannot form reduced Hessians");
  return GalerkinModel(x, op.restrict(grad), obj.reduced_hessian(x, op), op.restrict(x));
}

GalerkinModel build_galerkin(const Objective& obj, const Vec& x, const SamplingOperator& op) {
  return build_galerkin(obj, x, obj.gradient(x), op);
}

CoherencyReport check_coherency(const GalerkinModel& model, const Objective& obj,
                                const SamplingOperator& op, const Vec& x) {
  CoherencyReport rep;
  const Vec rg = op.restrict(obj.gradient(x));
  rep.first_order = (rg - model.gradient(model.y0())).norm();
  const Mat P = op.prolongation();
  const Mat rhp = P.transpose() * obj.dense_hessian(x) * P;
  rep.second_order = (rhp - model.hessian()).lpNorm<Eigen::Infinity>();
  return rep;
}

}  // namespace sublevel
