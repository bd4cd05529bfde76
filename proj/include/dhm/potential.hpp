#pragma once

// Potentials V(phi, psi) written as finite sums of products f_k(phi) g_k(psi)
// with closed-form derivatives in both arguments.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dhm/fields.hpp"

namespace dhm {

// Closed-form function on the ambient space R^q, restricted to the target.
class MapFunction {
 public:
  enum class Kind { Quadratic, Cosine };

  // c0 + <b, y> + 1/2 y^T C y
  static MapFunction quadratic(double c0, Eigen::VectorXd b, Eigen::MatrixXd c);
  static MapFunction constant(double c0, int q);
  static MapFunction linear(Eigen::VectorXd b);
  // amp cos(<a, y>)
  static MapFunction cosine(double amp, Eigen::VectorXd a);

  Kind kind() const { return kind_; }
  int ambient_dim() const { return static_cast<int>(vec_.size()); }
  double value(const Eigen::Ref<const Eigen::VectorXd>& y) const;
  Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& y) const;
  Eigen::MatrixXd hessian(const Eigen::Ref<const Eigen::VectorXd>& y) const;

  const Eigen::VectorXd& vector() const { return vec_; }
  const Eigen::MatrixXd& matrix() const { return mat_; }
  double scalar() const { return scalar_; }

 private:
  Kind kind_ = Kind::Quadratic;
  double scalar_ = 0.0;
  Eigen::VectorXd vec_;
  Eigen::MatrixXd mat_;
};

// Spinor factor g(psi) of one site block psi (spinor_dim x q, column alpha = psi^alpha).
// Gradients are taken w.r.t. the real pairing Re tr(a^dagger b).
class SpinorFactor {
 public:
  enum class Kind { One, NormPow, CurvatureQuartic, Exp };

  static SpinorFactor one() { return SpinorFactor(Kind::One, 0); }
  // |psi|^s, s even
  static SpinorFactor norm_pow(int s) { return SpinorFactor(Kind::NormPow, s); }
  // sum R_{abcd} <psi^a, psi^c><psi^b, psi^d> for unit curvature: |psi|^4 - sum |<psi^a, psi^b>|^2
  static SpinorFactor curvature_quartic() { return SpinorFactor(Kind::CurvatureQuartic, 4); }
  // exp(|psi|^2)
  static SpinorFactor exp_norm() { return SpinorFactor(Kind::Exp, 0); }

  Kind kind() const { return kind_; }
  int power() const { return s_; }
  double value(const Eigen::Ref<const Eigen::MatrixXcd>& psi) const;
  Eigen::MatrixXcd gradient(const Eigen::Ref<const Eigen::MatrixXcd>& psi) const;
  // Directional derivative of the gradient along xi.
  Eigen::MatrixXcd linearization(const Eigen::Ref<const Eigen::MatrixXcd>& psi,
                                 const Eigen::Ref<const Eigen::MatrixXcd>& xi) const;

 private:
  SpinorFactor(Kind k, int s) : kind_(k), s_(s) {}
  Kind kind_;
  int s_;
};

struct PotentialTerm {
  double coefficient = 1.0;
  MapFunction f;
  SpinorFactor g;
};

enum class PotentialKind { Zero, Structured, CurvatureV1, SuperpotentialV2, MassV3, ExponentialV4, MapOnly };

std::string to_string(PotentialKind k);
PotentialKind potential_kind_from_string(const std::string& s);

struct PotentialSpec {
  PotentialKind kind = PotentialKind::Zero;
  // Structured: H(phi) + G(phi) |psi|^s
  MapFunction h = MapFunction::constant(0.0, 1);
  MapFunction g = MapFunction::constant(0.0, 1);
  int s = 2;
  // CurvatureV1 coefficient.
  double coefficient = 1.0 / 12.0;
  // SuperpotentialV2: W(y) = <w, y>.
  Eigen::VectorXd w;
  // MassV3
  double lambda = 0.0;
  // ExponentialV4 and MapOnly
  MapFunction map = MapFunction::constant(0.0, 1);

  static PotentialSpec zero();
  static PotentialSpec structured(MapFunction h, MapFunction g, int s);
  static PotentialSpec curvature_v1();
  static PotentialSpec superpotential_v2(Eigen::VectorXd w);
  static PotentialSpec mass_v3(double lambda);
  static PotentialSpec exponential_v4(MapFunction map);
  static PotentialSpec map_only(MapFunction map);

  // Throws ConfigurationError on violated invariants.
  void validate(int q) const;
};

class Potential {
 public:
  Potential(PotentialSpec spec, const Target& target);

  const PotentialSpec& spec() const { return spec_; }
  const std::vector<PotentialTerm>& terms() const { return terms_; }
  // Largest spinor power s of the growth bound, or -1 for exponential growth.
  int growth_exponent() const;
  bool within_regularity_scope() const { return growth_exponent() >= 0; }

  // Pointwise pieces at target point y with tangent spinor block psi.
  double value_at(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::MatrixXcd>& psi) const;
  Eigen::VectorXd grad_map_at(const Eigen::Ref<const Eigen::VectorXd>& y,
                              const Eigen::Ref<const Eigen::MatrixXcd>& psi) const;
  Eigen::MatrixXcd grad_spinor_at(const Eigen::Ref<const Eigen::VectorXd>& y,
                                  const Eigen::Ref<const Eigen::MatrixXcd>& psi) const;

  Eigen::VectorXd density(const MapField& phi, const SpinorField& psi) const;
  double integral(const MapField& phi, const SpinorField& psi) const;
  // nabla V, tangent along phi.
  TangentField grad_map(const MapField& phi, const SpinorField& psi) const;
  // V_psi, tangent along phi.
  SpinorField grad_spinor(const MapField& phi, const SpinorField& psi) const;

  // Second-order pieces.
  // Hess V(eta, .) as a tangent field.
  TangentField hessian_map(const MapField& phi, const SpinorField& psi, const TangentField& eta) const;
  // Pointwise iota(xi, xi) V_psipsi.
  Eigen::VectorXd iota_xi_xi(const MapField& phi, const SpinorField& psi, const SpinorField& xi) const;
  // iota(xi) nabla V_psi: derivative of nabla V along psi + t xi.
  TangentField iota_xi_grad(const MapField& phi, const SpinorField& psi, const SpinorField& xi) const;
  // Derivative of V_psi along psi + t xi (phi fixed), tangent projected.
  SpinorField spinor_linearization(const MapField& phi, const SpinorField& psi, const SpinorField& xi) const;
  // Derivative of the ambient V_psi along phi + t eta (psi fixed), tangent projected.
  SpinorField mixed_spinor(const MapField& phi, const SpinorField& psi, const TangentField& eta) const;

 private:
  PotentialSpec spec_;
  Target target_;
  std::vector<PotentialTerm> terms_;
};

struct GrowthReport {
  std::vector<double> magnitudes;
  double slope_value = 0.0;
  double slope_map_gradient = 0.0;
  double slope_spinor_gradient = 0.0;
  int declared_exponent = 0;
  bool conclusive = true;
  bool super_polynomial = false;
  bool within_bounds = true;
  std::string note;
};

// Log-log slopes of |V - V(0)|, |nabla V - nabla V(0)| and |V_psi| along psi -> t psi at
// the site where |psi| is largest.
GrowthReport growth_report(const Potential& v, const MapField& phi, const SpinorField& psi,
                           const std::vector<double>& magnitudes);

}  // namespace dhm
