#pragma once

// Differential of a map, Dirichlet energy, untwisted and twisted Dirac
// operators on the lattice, and the full action functional.

#include <vector>

#include <Eigen/Dense>

#include "dhm/fields.hpp"

namespace dhm {

class Potential;

// Raw spectral derivative of phi along one axis (winding slope included).
TangentField map_derivative(const MapField& phi, int axis);
// dphi(e_i) projected to T_phi N, one field per axis.
std::vector<TangentField> differential(const MapField& phi);
// |dphi|^2 per site.
Eigen::VectorXd energy_density(const std::vector<TangentField>& dphi);
double dirichlet_energy(const MapField& phi);

// Spinor derivative along one axis with the spin-structure phase of that axis.
SpinorField spinor_derivative(const SpinorField& psi, int axis);
// gamma_i applied to every target slot.
SpinorField clifford_multiply(const SpinorField& psi, int axis);
SpinorField clifford_multiply(const SpinorField& psi, const Eigen::Matrix2cd& g);

// Dirac operator sum_i gamma_i d_i on plain (q = 1) or vector spinors.
class UntwistedDirac {
 public:
  explicit UntwistedDirac(GeometryPtr geom) : geom_(std::move(geom)) {}

  // Componentwise on a vector spinor, ambient R^q slots untouched.
  SpinorField apply(const SpinorField& psi) const;
  // Acts on plain spinors (spinor_dim values per site).
  Eigen::VectorXcd apply_plain(const Eigen::VectorXcd& u) const;
  // Dense matrix on plain spinors, size sites * spinor_dim.
  Eigen::MatrixXcd dense() const;

 private:
  GeometryPtr geom_;
};

// Matrix of an operator on tangent vector spinors in the orthonormal tangent
// coordinates described by `basis` (one q x dim N block per site).
struct OperatorMatrix {
  Eigen::MatrixXcd matrix;
  std::vector<Eigen::MatrixXd> basis;
  GeometryPtr geom;
};

// Twisted Dirac operator along phi, realized extrinsically as the tangent
// projection of the componentwise Dirac operator.
class TwistedDirac {
 public:
  explicit TwistedDirac(const MapField& phi);

  const MapField& map() const { return phi_; }
  // Throws ContractViolation if psi leaves the tangent bundle by more than 1e-8.
  SpinorField apply(const SpinorField& psi) const;
  // Same without the tangency contract (used on ambient-valued data).
  SpinorField apply_unchecked(const SpinorField& psi) const;

  // Tangent coordinates: site-major, then tangent index, then spinor index.
  std::size_t coordinate_count() const;
  Eigen::VectorXcd to_coordinates(const SpinorField& psi) const;
  SpinorField from_coordinates(const Eigen::VectorXcd& c) const;
  const std::vector<Eigen::MatrixXd>& tangent_bases() const { return bases_; }

  OperatorMatrix dense() const;

 private:
  MapField phi_;
  std::vector<Eigen::MatrixXd> bases_;
};

// Largest matrix dimension assembled densely.
inline constexpr std::size_t kDenseDiracCap = 2048;

// S_P = integral of |dphi|^2 + Re<psi, Dpsi> - 2 V.
double action(const MapField& phi, const SpinorField& psi, const Potential& potential);

// Pointwise Re<psi, Dpsi>.
Eigen::VectorXd dirac_density(const SpinorField& psi, const SpinorField& dpsi);

}  // namespace dhm
