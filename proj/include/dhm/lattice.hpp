#pragma once

// Flat periodic lattices, spin structures, Clifford matrices and the
// derivative operators acting on lattice functions.

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace dhm {

using cplx = std::complex<double>;

// Sampled flat torus R^m / (L_1 Z x ... x L_m Z) with n_i points per axis.
// Sites are indexed row-major: the last axis runs fastest.
class Lattice {
 public:
  Lattice(int dim, std::array<int, 3> points, std::array<double, 3> lengths);
  static Lattice cubic(int dim, int points, double length);

  int dim() const { return dim_; }
  int points(int axis) const { return points_[axis]; }
  double length(int axis) const { return lengths_[axis]; }
  double spacing(int axis) const { return lengths_[axis] / points_[axis]; }
  // h^m, the weight of one site in discrete integrals.
  double cell_volume() const { return cell_volume_; }
  double volume() const;
  std::size_t sites() const { return sites_; }
  std::size_t stride(int axis) const { return strides_[axis]; }

  std::array<int, 3> coords(std::size_t site) const;
  // Wraps every coordinate periodically.
  std::size_t index(std::array<int, 3> coords) const;
  double position(int axis, int j) const { return j * spacing(axis); }

  bool operator==(const Lattice& other) const;

 private:
  int dim_;
  std::array<int, 3> points_;
  std::array<double, 3> lengths_;
  std::array<std::size_t, 3> strides_{};
  std::size_t sites_ = 1;
  double cell_volume_ = 1.0;
};

enum class Phase { Periodic, Antiperiodic };

inline double phase_shift(Phase p) { return p == Phase::Antiperiodic ? 0.5 : 0.0; }

// One of the 2^m spin structures of the flat torus, encoded per axis as the
// phase picked up by spinors going once around that axis.
class SpinStructure {
 public:
  explicit SpinStructure(int dim);  // all periodic
  SpinStructure(std::initializer_list<Phase> phases);
  explicit SpinStructure(const std::vector<Phase>& phases);
  // shifts[i] in {0, 1/2}
  static SpinStructure from_shifts(std::span<const double> shifts);
  static std::vector<SpinStructure> all(int dim);

  int dim() const { return dim_; }
  Phase phase(int axis) const { return phases_[axis]; }
  double shift(int axis) const { return phase_shift(phases_[axis]); }

  bool operator==(const SpinStructure& other) const;

 private:
  int dim_;
  std::array<Phase, 3> phases_{Phase::Periodic, Phase::Periodic, Phase::Periodic};
};

// Clifford multiplication by the frame vectors e_1..e_m on 2-component spinors.
struct CliffordRep {
  int dim = 0;
  std::vector<Eigen::Matrix2cd> gamma;
  // gamma_1 gamma_2 for m = 2, zero otherwise.
  Eigen::Matrix2cd chirality = Eigen::Matrix2cd::Zero();
  bool has_chirality = false;

  int spinor_dim() const { return 2; }
};

CliffordRep make_clifford(int dim);

enum class Stencil { Spectral, CentralDifference };

// Derivative matrix along a single axis of n points. Entries are exactly
// skew-Hermitian, so the induced lattice operator is skew-adjoint.
Eigen::MatrixXcd axis_derivative_matrix(int points, double length, Phase phase, Stencil stencil);

// Precomputed per-axis derivative matrices for one lattice and stencil.
class Derivatives {
 public:
  explicit Derivatives(const Lattice& lattice, Stencil stencil = Stencil::Spectral);

  const Lattice& lattice() const { return lattice_; }
  Stencil stencil() const { return stencil_; }
  const Eigen::MatrixXcd& matrix(int axis, Phase phase) const;
  // Real part of the periodic matrix. For real data this is the derivative
  // with the unpaired Nyquist mode removed.
  const Eigen::MatrixXd& real_matrix(int axis) const { return real_[axis]; }

  // in/out hold `components` interleaved values per site.
  void apply(std::span<const cplx> in, std::span<cplx> out, int components, int axis, Phase phase) const;
  void apply(std::span<const double> in, std::span<double> out, int components, int axis) const;

 private:
  Lattice lattice_;
  Stencil stencil_;
  std::vector<std::array<Eigen::MatrixXcd, 2>> complex_;
  std::vector<Eigen::MatrixXd> real_;
};

// Free-function forms of the two discretizations.
std::vector<cplx> spectral_derivative(const Lattice& lattice, std::span<const cplx> field, int components,
                                      int axis, Phase phase);
std::vector<cplx> central_difference_derivative(const Lattice& lattice, std::span<const cplx> field,
                                                int components, int axis, Phase phase);

// Lattice pairing h^m * Re sum conj(a) b.
double lattice_inner(const Lattice& lattice, std::span<const cplx> a, std::span<const cplx> b);
double lattice_inner(const Lattice& lattice, std::span<const double> a, std::span<const double> b);
// Full complex pairing h^m * sum conj(a) b.
cplx lattice_hermitian(const Lattice& lattice, std::span<const cplx> a, std::span<const cplx> b);

template <typename Vec>
auto as_span(const Vec& v) {
  return std::span<const typename Vec::Scalar>(v.data(), static_cast<std::size_t>(v.size()));
}
template <typename Vec>
auto as_mut_span(Vec& v) {
  return std::span<typename Vec::Scalar>(v.data(), static_cast<std::size_t>(v.size()));
}

}  // namespace dhm
