#include "dhm/fields.hpp"

#include <cmath>
#include <numbers>

#include "dhm/errors.hpp"

namespace dhm {

Target Target::sphere(int q) {
  if (q < 2) throw ConfigurationError("sphere target needs ambient dimension >= 2");
  return Target(TargetKind::Sphere, q);
}

Target Target::flat_torus(int q) {
  if (q < 1) throw ConfigurationError("torus target needs ambient dimension >= 1");
  return Target(TargetKind::FlatTorus, q);
}

bool Target::contains(const Eigen::Ref<const Eigen::VectorXd>& y, double tol) const {
  if (y.size() != q_) return false;
  if (kind_ == TargetKind::FlatTorus) return y.allFinite();
  return std::abs(y.norm() - 1.0) <= tol;
}

Eigen::MatrixXd Target::projector(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(q_, q_);
  if (kind_ == TargetKind::Sphere) p -= y * y.transpose();
  return p;
}

Eigen::MatrixXd Target::normal_frame(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  if (kind_ == TargetKind::FlatTorus) return Eigen::MatrixXd(q_, 0);
  return y;
}

Eigen::MatrixXd Target::tangent_basis(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  if (kind_ == TargetKind::FlatTorus) return Eigen::MatrixXd::Identity(q_, q_);
  // Householder reflection sending y to a multiple of e_q; its other columns
  // span y^perp.
  Eigen::VectorXd u = y;
  double s = y(q_ - 1) >= 0.0 ? 1.0 : -1.0;
  u(q_ - 1) += s;
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(q_, q_) - 2.0 * u * u.transpose() / u.squaredNorm();
  return h.leftCols(q_ - 1);
}

Eigen::VectorXd Target::curvature_op(const Eigen::Ref<const Eigen::VectorXd>& y,
                                     const Eigen::Ref<const Eigen::VectorXd>& x,
                                     const Eigen::Ref<const Eigen::VectorXd>& yv,
                                     const Eigen::Ref<const Eigen::VectorXd>& z) const {
  if (kind_ == TargetKind::Sphere) {
    const double tol = 1e-10;
    if (std::abs(y.dot(x)) > tol || std::abs(y.dot(yv)) > tol || std::abs(y.dot(z)) > tol)
      throw ContractViolation("curvature_op: arguments must be tangent at y");
  }
  return curvature() * (yv.dot(z) * x - x.dot(z) * yv);
}

Eigen::VectorXd Target::curvature_derivative_op(const Eigen::Ref<const Eigen::VectorXd>&,
                                                const Eigen::Ref<const Eigen::VectorXd>&,
                                                const Eigen::Ref<const Eigen::VectorXd>&,
                                                const Eigen::Ref<const Eigen::VectorXd>&,
                                                const Eigen::Ref<const Eigen::VectorXd>&) const {
  // Constant curvature: nabla R = 0.
  return Eigen::VectorXd::Zero(q_);
}

Geometry::Geometry(Lattice lattice, SpinStructure spin, Target target, Stencil stencil)
    : lattice_(lattice),
      spin_(spin),
      target_(target),
      clifford_(make_clifford(lattice.dim())),
      derivatives_(lattice, stencil) {
  if (spin.dim() != lattice.dim()) throw DimensionError("spin structure and lattice dimensions differ");
}

std::shared_ptr<const Geometry> Geometry::make(Lattice lattice, SpinStructure spin, Target target, Stencil stencil) {
  return std::make_shared<const Geometry>(lattice, spin, target, stencil);
}

bool Geometry::compatible(const Geometry& other) const {
  return lattice_ == other.lattice_ && spin_ == other.spin_ && target_ == other.target_ &&
         derivatives_.stencil() == other.derivatives_.stencil();
}

MapField::MapField(GeometryPtr geom, Eigen::VectorXd values, Eigen::MatrixXi winding)
    : geom_(std::move(geom)), values_(std::move(values)), winding_(std::move(winding)) {
  const int q = geom_->q();
  const int m = geom_->dim();
  if (values_.size() != static_cast<Eigen::Index>(geom_->sites() * q))
    throw ContractViolation("map field has wrong number of values");
  if (winding_.size() == 0) winding_ = Eigen::MatrixXi::Zero(q, m);
  if (winding_.rows() != q || winding_.cols() != m) throw ContractViolation("winding matrix must be q x m");
  if (geom_->target().kind() == TargetKind::Sphere && winding_.cwiseAbs().maxCoeff() != 0)
    throw ContractViolation("sphere-valued maps carry no winding");
  for (std::size_t s = 0; s < geom_->sites(); ++s) {
    if (!geom_->target().contains(at(s), 1e-12))
      throw ContractViolation("map value off the target at site " + std::to_string(s));
  }
}

Eigen::MatrixXd MapField::winding_slope() const {
  const auto& lat = geom_->lattice();
  Eigen::MatrixXd slope(geom_->q(), geom_->dim());
  for (int i = 0; i < geom_->dim(); ++i)
    slope.col(i) = winding_.col(i).cast<double>() * (2.0 * std::numbers::pi / lat.length(i));
  return slope;
}

Eigen::VectorXd MapField::periodic_part() const {
  if (winding_.cwiseAbs().maxCoeff() == 0) return values_;
  const auto& lat = geom_->lattice();
  const Eigen::MatrixXd slope = winding_slope();
  Eigen::VectorXd u = values_;
  Eigen::VectorXd x(geom_->dim());
  for (std::size_t s = 0; s < lat.sites(); ++s) {
    auto c = lat.coords(s);
    for (int i = 0; i < geom_->dim(); ++i) x(i) = lat.position(i, c[i]);
    u.segment(s * geom_->q(), geom_->q()) -= slope * x;
  }
  return u;
}

SpinorField SpinorField::zero(GeometryPtr geom) {
  Eigen::Index n = static_cast<Eigen::Index>(geom->sites() * geom->spinor_components());
  return {geom, Eigen::VectorXcd::Zero(n)};
}

TangentField TangentField::zero(GeometryPtr geom) {
  Eigen::Index n = static_cast<Eigen::Index>(geom->sites() * geom->q());
  return {geom, Eigen::VectorXd::Zero(n)};
}

MapField project_to_target(GeometryPtr geom, const Eigen::VectorXd& raw, const Eigen::MatrixXi& winding) {
  const int q = geom->q();
  if (raw.size() != static_cast<Eigen::Index>(geom->sites() * q))
    throw ContractViolation("raw map has wrong number of values");
  if (geom->target().kind() == TargetKind::FlatTorus) return MapField(geom, raw, winding);
  Eigen::VectorXd out = raw;
  for (std::size_t s = 0; s < geom->sites(); ++s) {
    auto v = out.segment(s * q, q);
    double r = v.norm();
    if (!(r >= 1e-8)) throw RetractionFailure("cannot retract near-zero vector at site " + std::to_string(s), s);
    v /= r;
  }
  return MapField(geom, std::move(out), winding);
}

SpinorField project_spinor_tangent(const SpinorField& raw, const MapField& phi) {
  const auto& g = *phi.geometry();
  if (!raw.geom->compatible(g)) throw ContractViolation("spinor and map live on different geometries");
  SpinorField out{raw.geom, raw.values};
  if (g.target().kind() == TargetKind::FlatTorus) return out;
  for (std::size_t s = 0; s < g.sites(); ++s) {
    auto y = phi.at(s);
    auto block = out.at(s);  // spinor_dim x q
    Eigen::VectorXcd normal_part = block * y.cast<cplx>();
    block -= normal_part * y.transpose().cast<cplx>();
  }
  return out;
}

TangentField project_tangent(const TangentField& raw, const MapField& phi) {
  const auto& g = *phi.geometry();
  TangentField out{raw.geom, raw.values};
  if (g.target().kind() == TargetKind::FlatTorus) return out;
  for (std::size_t s = 0; s < g.sites(); ++s) {
    auto y = phi.at(s);
    auto v = out.at(s);
    v -= y.dot(v) * y;
  }
  return out;
}

double spinor_tangency_defect(const SpinorField& psi, const MapField& phi) {
  const auto& g = *phi.geometry();
  double worst = 0.0;
  for (std::size_t s = 0; s < g.sites(); ++s) {
    Eigen::MatrixXd nu = g.target().normal_frame(phi.at(s));
    if (nu.cols() == 0) continue;
    Eigen::MatrixXcd c = psi.at(s) * nu.cast<cplx>();
    worst = std::max(worst, c.cwiseAbs().maxCoeff());
  }
  return worst;
}

double tangent_defect(const TangentField& eta, const MapField& phi) {
  const auto& g = *phi.geometry();
  double worst = 0.0;
  for (std::size_t s = 0; s < g.sites(); ++s) {
    Eigen::MatrixXd nu = g.target().normal_frame(phi.at(s));
    if (nu.cols() == 0) continue;
    worst = std::max(worst, (nu.transpose() * eta.at(s)).cwiseAbs().maxCoeff());
  }
  return worst;
}

double l2_inner(const SpinorField& a, const SpinorField& b) {
  return lattice_inner(a.geom->lattice(), as_span(a.values), as_span(b.values));
}

double l2_inner(const TangentField& a, const TangentField& b) {
  return lattice_inner(a.geom->lattice(), as_span(a.values), as_span(b.values));
}

double l2_norm(const SpinorField& a) { return std::sqrt(l2_inner(a, a)); }
double l2_norm(const TangentField& a) { return std::sqrt(l2_inner(a, a)); }

Eigen::MatrixXcd spinor_gram(const Eigen::Ref<const Eigen::MatrixXcd>& psi) { return psi.adjoint() * psi; }

Eigen::MatrixXd spinor_pairing(const Eigen::Ref<const Eigen::MatrixXcd>& a, const Eigen::Matrix2cd& g,
                               const Eigen::Ref<const Eigen::MatrixXcd>& b) {
  return (a.adjoint() * g * b).real();
}

}  // namespace dhm
