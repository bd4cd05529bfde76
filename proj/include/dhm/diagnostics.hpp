#pragma once

// Discrete Morrey norms, the regularity smallness check, the coupling energy
// and surrogate Sobolev norms of the weak-solution space.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "dhm/fields.hpp"

namespace dhm {

struct MorreyNorm {
  double p = 2.0;
  double lambda = 2.0;
  double value = 0.0;
  std::size_t center = 0;
  double radius = 0.0;
};

// sup over lattice-centred balls B_r(c), r in {h, 2h, ..., R}, of
// (r^(lambda - m) h^m sum_{|x - c| < r} |f|^p)^(1/p). Distances use the minimum
// image on the torus; R defaults to the first multiple of h whose ball covers
// the whole lattice. h is the smallest spacing. Ties keep the smallest centre,
// then the smallest radius.
MorreyNorm morrey_norm(const Lattice& lat, const Eigen::VectorXd& magnitude, double p, double lambda,
                       double max_radius = 0.0);
// Same without the 0 < lambda <= m precondition (used for M^{2, 2s-2}).
MorreyNorm morrey_norm_unchecked(const Lattice& lat, const Eigen::VectorXd& magnitude, double p, double lambda,
                                 double max_radius = 0.0);

// Smallest radius whose ball about any site covers the torus.
double covering_radius(const Lattice& lat);

// |dphi| and |psi| per site.
Eigen::VectorXd differential_magnitude(const MapField& phi);
Eigen::VectorXd spinor_magnitude(const SpinorField& psi);

struct SmallnessRow {
  double radius = 0.0;
  double map_norm = 0.0;     // ||dphi||_{M^{2,2}} over balls of radius <= R
  double spinor_norm = 0.0;  // ||psi||_{M^{4,2}}
  double sum = 0.0;
  double spinor_high = 0.0;  // ||psi||_{M^{2, 2s - 2}} when s > 4
};

struct SmallnessReport {
  double epsilon = 0.0;
  int s = 0;
  std::vector<SmallnessRow> rows;  // full lattice first, then dyadic radii descending
  bool satisfied_full = false;
  double largest_radius = 0.0;     // 0 when no listed radius satisfies the bound
};
SmallnessReport smallness_check(const MapField& phi, const SpinorField& psi, double epsilon, int s = 0);

struct CouplingEnergy {
  Eigen::VectorXd density;  // |dphi|^2 + |psi|^4
  double integral = 0.0;
};
CouplingEnergy coupling_energy(const MapField& phi, const SpinorField& psi);

struct SurrogateNorms {
  int t = 4;
  double map_w12 = 0.0;
  double spinor_w1_43 = 0.0;
  double spinor_lt = 0.0;
};
// t = 4 for 0 < s <= 4, t = s for s > 4.
SurrogateNorms surrogate_norms(const MapField& phi, const SpinorField& psi, int s);

}  // namespace dhm
