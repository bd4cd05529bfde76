#pragma once

// Euler-Lagrange residuals (intrinsic and extrinsic), first-variation checks,
// the stress-energy tensor, the second variation and the Jacobi operator.

#include <vector>

#include <Eigen/Dense>

#include "dhm/fields.hpp"
#include "dhm/potential.hpp"

namespace dhm {

struct ELResidual {
  TangentField map_residual;
  SpinorField spinor_residual;
  double map_norm = 0.0;
  double spinor_norm = 0.0;
};

// tau(phi) = T(sum_i d_i d_i phi).
TangentField tension(const MapField& phi);
// 1/2 R(psi, e_i . psi) dphi(e_i).
TangentField curvature_coupling(const MapField& phi, const SpinorField& psi);
// map: tau - 1/2 R(psi, e_i psi) dphi_i + grad V;  spinor: D psi - V_psi.
ELResidual el_residual(const MapField& phi, const SpinorField& psi, const Potential& v);

// Per-site coefficients of the compact extrinsic system on a sphere target.
struct ExtrinsicCoefficients {
  // omega[site][i], f[site][i]: q x q antisymmetric.
  std::vector<std::vector<Eigen::MatrixXd>> omega;
  std::vector<std::vector<Eigen::MatrixXd>> f;
  // a[site]: (spinor_dim q) x (spinor_dim q), block (alpha, beta) = A_{alpha beta}.
  std::vector<Eigen::MatrixXcd> a;
};
ExtrinsicCoefficients extrinsic_coefficients(const MapField& phi, const SpinorField& psi);

struct ExtrinsicResidual {
  ELResidual residual;
  // max |Omega + Omega^T|
  double antisymmetry_defect = 0.0;
  // max over sites of |Omega|^2 / (4 |dphi|^2 + 2 m |psi|^4) and |A| / (sqrt(spinor_dim) |dphi|)
  double omega_bound_ratio = 0.0;
  double a_bound_ratio = 0.0;
  bool bounds_hold = true;
};
// Residuals of  Delta phi = Omega . dphi - grad V,  dslash psi = A psi + V_psi. Sphere targets only.
ExtrinsicResidual el_residual_extrinsic(const MapField& phi, const SpinorField& psi, const Potential& v);

// Variation path phi_t = P(phi + t eta), psi_t = T_{phi_t}(psi + t xi).
MapField varied_map(const MapField& phi, const TangentField& eta, double t);
SpinorField varied_spinor(const SpinorField& psi, const SpinorField& xi, const MapField& phi_t, double t);
double action_along_path(const MapField& phi, const SpinorField& psi, const Potential& v, const TangentField& eta,
                         const SpinorField& xi, double t);

struct FirstVariation {
  double analytic = 0.0;
  double numeric = 0.0;
};
FirstVariation first_variation_check(const MapField& phi, const SpinorField& psi, const Potential& v,
                                     const TangentField& eta, const SpinorField& xi, double t = 1e-4);

struct StressEnergy {
  GeometryPtr geom;
  std::vector<Eigen::MatrixXd> s;  // m x m per site

  Eigen::VectorXd trace() const;
  double symmetry_defect() const;
};
StressEnergy stress_energy(const MapField& phi, const SpinorField& psi, const Potential& v);
// (2 - m)|dphi|^2 + (1 - m) Re<psi, D psi> + 2 m V per site.
Eigen::VectorXd stress_trace_formula(const MapField& phi, const SpinorField& psi, const Potential& v);
// (div S)_i = sum_j d_j S_ij, sites x m.
Eigen::MatrixXd divergence_stress_energy(const StressEnergy& s);

// Second variation quadratic form evaluated term by term. The checked version
// rejects inputs whose EL residual norms exceed `criticality_tol`.
double second_variation(const MapField& phi, const SpinorField& psi, const Potential& v, const TangentField& eta,
                        const SpinorField& xi, double criticality_tol = 1e-8);
double second_variation_form(const MapField& phi, const SpinorField& psi, const Potential& v,
                             const TangentField& eta, const SpinorField& xi);

// Symmetric Jacobi operator H with  Q(eta, xi) = <eta, H_eta> + Re<xi, H_xi>  (L^2 pairings).
struct JacobiAction {
  TangentField eta;
  SpinorField xi;
};
JacobiAction jacobi_apply(const MapField& phi, const SpinorField& psi, const Potential& v, const TangentField& eta,
                          const SpinorField& xi);

inline constexpr std::size_t kDenseJacobiCap = 3072;

// Matrix of H in L^2-orthonormal real tangent coordinates: first the eta block
// (site, tangent index), then the xi block (site, tangent index, spinor index, re/im).
struct JacobiMatrix {
  Eigen::MatrixXd matrix;
  GeometryPtr geom;
  std::vector<Eigen::MatrixXd> basis;
  std::size_t map_block = 0;
  std::size_t spinor_block = 0;

  Eigen::VectorXd to_coordinates(const TangentField& eta, const SpinorField& xi) const;
  JacobiAction from_coordinates(const Eigen::VectorXd& c) const;
  double symmetry_defect() const;
};
JacobiMatrix jacobi_matrix(const MapField& phi, const SpinorField& psi, const Potential& v,
                           double criticality_tol = 1e-8);

}  // namespace dhm
