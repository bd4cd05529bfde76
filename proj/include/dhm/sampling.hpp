#pragma once

// Seeded random numbers and the field constructors used by tests, the solver
// and the command line: analytic maps, smooth random fields, plane-wave spinors.

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "dhm/fields.hpp"

namespace dhm {

// mt19937_64 with distributions computed from raw bits, so streams are
// identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform();  // [0, 1)
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  double normal();
  int integer(int lo, int hi);  // inclusive
  std::uint64_t bits() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

MapField constant_map(GeometryPtr geom, const Eigen::VectorXd& y);
// (cos(2 pi x_1 / L_1), sin(2 pi x_1 / L_1), 0, ...) on a sphere target.
MapField equator_map(GeometryPtr geom);
// x -> x on the torus target with q = m, winding = identity (for L = 2 pi).
MapField identity_torus_map(GeometryPtr geom);

// Sphere map x -> R0 Rz(2 pi k1.x / L + a) Ry(2 pi k2.x / L + b) e_3 into S^2 together with the
// co-rotating orthonormal tangent frame. Every component is a trigonometric
// polynomial of degree |k1| + |k2| per axis.
struct FramedMap {
  MapField map;
  std::vector<Eigen::MatrixXd> frame;  // q x dim N per site
};
FramedMap rotation_map(GeometryPtr geom, const std::array<int, 3>& k1, const std::array<int, 3>& k2, double a,
                       double b, const Eigen::Matrix3d& r0);
FramedMap random_rotation_map(GeometryPtr geom, Rng& rng, int max_wave = 1);

// Smooth periodic lift plus winding for the torus target.
MapField random_torus_map(GeometryPtr geom, Rng& rng, int max_wave = 2, double amplitude = 0.5,
                          const Eigen::MatrixXi& winding = {});

// Trigonometric polynomial of degree max_wave per axis with random coefficients,
// real (phase ignored) or complex spinor-phase valued.
Eigen::VectorXd smooth_real_field(const Lattice& lat, Rng& rng, int comps, int max_wave);
Eigen::VectorXcd smooth_spinor_field(const Lattice& lat, const SpinStructure& spin, Rng& rng, int comps, int max_wave);

// Tangent projection of a smooth ambient field (max_wave < 0: independent
// Gaussian values per site).
TangentField random_tangent_field(const MapField& phi, Rng& rng, int max_wave = 2);
SpinorField random_spinor_field(const MapField& phi, Rng& rng, int max_wave = 2);
// sum_a c_a(x) t_a(x) with smooth spinor coefficients c_a; band-limited when the frame is.
SpinorField random_frame_spinor(const FramedMap& fm, Rng& rng, int max_wave = 1);

// Unit L^2 plane-wave eigenspinor of the untwisted Dirac operator for the
// integer mode k, sign +1 / -1 selecting the eigenvalue +-|p|. Plain spinor values.
struct PlaneWave {
  Eigen::VectorXcd values;
  double eigenvalue = 0.0;
};
PlaneWave plane_wave_spinor(const Lattice& lat, const SpinStructure& spin, const CliffordRep& cl,
                            const std::array<int, 3>& k, int sign, int branch = 0);
// chi (x) t for a fixed ambient vector t.
SpinorField tensor_spinor(GeometryPtr geom, const Eigen::VectorXcd& chi, const Eigen::VectorXd& t);

}  // namespace dhm
