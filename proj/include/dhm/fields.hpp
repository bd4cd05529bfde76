#pragma once

// Target manifolds in extrinsic presentation and the lattice fields living
// on them: maps phi, vector spinors psi along phi, and tangent variations eta.

#include <cstddef>
#include <memory>

#include <Eigen/Dense>

#include "dhm/lattice.hpp"

namespace dhm {

enum class TargetKind { Sphere, FlatTorus };

// Unit sphere S^{q-1} in R^q or the flat torus (R / 2 pi Z)^q with the
// identity presentation. Both have constant sectional curvature.
class Target {
 public:
  static Target sphere(int ambient_dim);
  static Target flat_torus(int ambient_dim);

  TargetKind kind() const { return kind_; }
  int ambient_dim() const { return q_; }
  int dim() const { return kind_ == TargetKind::Sphere ? q_ - 1 : q_; }
  int codim() const { return q_ - dim(); }
  // Sectional curvature: 1 for the unit sphere, 0 for the flat torus.
  double curvature() const { return kind_ == TargetKind::Sphere ? 1.0 : 0.0; }

  bool contains(const Eigen::Ref<const Eigen::VectorXd>& y, double tol = 1e-12) const;
  // Tangent projection at y, Identity - sum nu nu^T.
  Eigen::MatrixXd projector(const Eigen::Ref<const Eigen::VectorXd>& y) const;
  // q x codim orthonormal normal frame nu_theta(y).
  Eigen::MatrixXd normal_frame(const Eigen::Ref<const Eigen::VectorXd>& y) const;
  // q x dim orthonormal basis of T_y N.
  Eigen::MatrixXd tangent_basis(const Eigen::Ref<const Eigen::VectorXd>& y) const;

  // Riemann tensor R(X,Y)Z = kappa (<Y,Z> X - <X,Z> Y) on tangent inputs.
  Eigen::VectorXd curvature_op(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& x,
                               const Eigen::Ref<const Eigen::VectorXd>& yv,
                               const Eigen::Ref<const Eigen::VectorXd>& z) const;
  // (nabla_W R)(X,Y)Z. Identically zero for both supported targets.
  Eigen::VectorXd curvature_derivative_op(const Eigen::Ref<const Eigen::VectorXd>& y,
                                          const Eigen::Ref<const Eigen::VectorXd>& w,
                                          const Eigen::Ref<const Eigen::VectorXd>& x,
                                          const Eigen::Ref<const Eigen::VectorXd>& yv,
                                          const Eigen::Ref<const Eigen::VectorXd>& z) const;

  bool operator==(const Target& o) const { return kind_ == o.kind_ && q_ == o.q_; }

 private:
  Target(TargetKind kind, int q) : kind_(kind), q_(q) {}
  TargetKind kind_;
  int q_;
};

// Everything a field needs to be interpreted: lattice, spin structure,
// target, Clifford matrices and the spectral derivative tables.
class Geometry {
 public:
  Geometry(Lattice lattice, SpinStructure spin, Target target, Stencil stencil = Stencil::Spectral);
  static std::shared_ptr<const Geometry> make(Lattice lattice, SpinStructure spin, Target target,
                                              Stencil stencil = Stencil::Spectral);

  const Lattice& lattice() const { return lattice_; }
  const SpinStructure& spin() const { return spin_; }
  const Target& target() const { return target_; }
  const CliffordRep& clifford() const { return clifford_; }
  const Derivatives& derivatives() const { return derivatives_; }

  int dim() const { return lattice_.dim(); }
  int q() const { return target_.ambient_dim(); }
  int spinor_dim() const { return clifford_.spinor_dim(); }
  std::size_t sites() const { return lattice_.sites(); }
  // Complex components per site of a vector spinor: q * spinor_dim.
  int spinor_components() const { return q() * spinor_dim(); }

  bool compatible(const Geometry& other) const;

 private:
  Lattice lattice_;
  SpinStructure spin_;
  Target target_;
  CliffordRep clifford_;
  Derivatives derivatives_;
};

using GeometryPtr = std::shared_ptr<const Geometry>;

// Map phi: lattice -> N in R^q. For the torus target the stored values are a
// continuous lift; `winding(alpha, i)` is the number of turns of component
// alpha around axis i, so phi(x + L e_i) = phi(x) + 2 pi winding(., i).
class MapField {
 public:
  MapField() = default;
  MapField(GeometryPtr geom, Eigen::VectorXd values, Eigen::MatrixXi winding = {});

  const GeometryPtr& geometry() const { return geom_; }
  const Eigen::VectorXd& values() const { return values_; }
  const Eigen::MatrixXi& winding() const { return winding_; }
  Eigen::Map<const Eigen::VectorXd> at(std::size_t site) const {
    return {values_.data() + site * geom_->q(), geom_->q()};
  }
  // Periodic part phi - (2 pi / L) winding x used by the spectral derivative.
  Eigen::VectorXd periodic_part() const;
  // Slope (2 pi / L_i) winding(alpha, i) of the linear part, q x m.
  Eigen::MatrixXd winding_slope() const;

 private:
  GeometryPtr geom_;
  Eigen::VectorXd values_;
  Eigen::MatrixXi winding_;
};

// Vector spinor psi: site-major, then target index alpha, then spinor index.
struct SpinorField {
  GeometryPtr geom;
  Eigen::VectorXcd values;

  static SpinorField zero(GeometryPtr geom);
  std::size_t offset(std::size_t site, int alpha) const {
    return (site * geom->q() + alpha) * geom->spinor_dim();
  }
  Eigen::Map<const Eigen::MatrixXcd> at(std::size_t site) const {
    // spinor_dim x q block, column alpha is psi^alpha at the site.
    return {values.data() + site * geom->spinor_components(), geom->spinor_dim(), geom->q()};
  }
  Eigen::Map<Eigen::MatrixXcd> at(std::size_t site) {
    return {values.data() + site * geom->spinor_components(), geom->spinor_dim(), geom->q()};
  }
};

// Section of phi^* TN (or an ambient R^q-valued lattice field).
struct TangentField {
  GeometryPtr geom;
  Eigen::VectorXd values;

  static TangentField zero(GeometryPtr geom);
  Eigen::Map<const Eigen::VectorXd> at(std::size_t site) const { return {values.data() + site * geom->q(), geom->q()}; }
  Eigen::Map<Eigen::VectorXd> at(std::size_t site) { return {values.data() + site * geom->q(), geom->q()}; }
};

// Pointwise retraction onto the target (radial projection for spheres).
MapField project_to_target(GeometryPtr geom, const Eigen::VectorXd& raw, const Eigen::MatrixXi& winding = {});

// Applies the tangent projection at phi(x) to every spinor slot.
SpinorField project_spinor_tangent(const SpinorField& raw, const MapField& phi);
TangentField project_tangent(const TangentField& raw, const MapField& phi);

// max over sites and normal directions of |sum_alpha nu^alpha psi^alpha|.
double spinor_tangency_defect(const SpinorField& psi, const MapField& phi);
double tangent_defect(const TangentField& eta, const MapField& phi);

// Field-level algebra used throughout.
double l2_inner(const SpinorField& a, const SpinorField& b);
double l2_inner(const TangentField& a, const TangentField& b);
double l2_norm(const SpinorField& a);
double l2_norm(const TangentField& a);

// Pointwise spinor pairings at a site.
// <psi^alpha, psi^beta> as a Hermitian q x q matrix.
Eigen::MatrixXcd spinor_gram(const Eigen::Ref<const Eigen::MatrixXcd>& psi);
// K_{alpha beta} = Re <a^alpha, G b^beta> for a 2x2 matrix G.
Eigen::MatrixXd spinor_pairing(const Eigen::Ref<const Eigen::MatrixXcd>& a, const Eigen::Matrix2cd& g,
                               const Eigen::Ref<const Eigen::MatrixXcd>& b);

}  // namespace dhm
