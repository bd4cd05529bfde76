#include "dhm/lattice.hpp"

#include <cmath>
#include <numbers>

#include "dhm/errors.hpp"

namespace dhm {

Lattice::Lattice(int dim, std::array<int, 3> points, std::array<double, 3> lengths)
    : dim_(dim), points_(points), lengths_(lengths) {
  if (dim != 2 && dim != 3) throw DimensionError("lattice dimension must be 2 or 3");
  for (int a = 0; a < dim; ++a) {
    if (points[a] < 4) throw ConfigurationError("need at least 4 points per axis");
    if (points[a] % 2 != 0) throw ConfigurationError("points per axis must be even");
    if (!(lengths[a] > 0.0)) throw ConfigurationError("side length must be positive");
  }
  for (int a = dim; a < 3; ++a) {
    points_[a] = 1;
    lengths_[a] = 1.0;
  }
  std::size_t s = 1;
  for (int a = dim - 1; a >= 0; --a) {
    strides_[a] = s;
    s *= static_cast<std::size_t>(points_[a]);
  }
  sites_ = s;
  for (int a = 0; a < dim; ++a) cell_volume_ *= spacing(a);
}

Lattice Lattice::cubic(int dim, int points, double length) {
  return Lattice(dim, {points, points, points}, {length, length, length});
}

double Lattice::volume() const {
  double v = 1.0;
  for (int a = 0; a < dim_; ++a) v *= lengths_[a];
  return v;
}

std::array<int, 3> Lattice::coords(std::size_t site) const {
  std::array<int, 3> c{0, 0, 0};
  for (int a = 0; a < dim_; ++a) c[a] = static_cast<int>((site / strides_[a]) % points_[a]);
  return c;
}

std::size_t Lattice::index(std::array<int, 3> coords) const {
  std::size_t s = 0;
  for (int a = 0; a < dim_; ++a) {
    int n = points_[a];
    int j = ((coords[a] % n) + n) % n;
    s += static_cast<std::size_t>(j) * strides_[a];
  }
  return s;
}

bool Lattice::operator==(const Lattice& other) const {
  return dim_ == other.dim_ && points_ == other.points_ && lengths_ == other.lengths_;
}

SpinStructure::SpinStructure(int dim) : dim_(dim) {
  if (dim != 2 && dim != 3) throw DimensionError("spin structure dimension must be 2 or 3");
}

SpinStructure::SpinStructure(std::initializer_list<Phase> phases)
    : SpinStructure(std::vector<Phase>(phases)) {}

SpinStructure::SpinStructure(const std::vector<Phase>& phases) : SpinStructure(static_cast<int>(phases.size())) {
  for (int a = 0; a < dim_; ++a) phases_[a] = phases[a];
}

SpinStructure SpinStructure::from_shifts(std::span<const double> shifts) {
  std::vector<Phase> phases;
  for (double s : shifts) {
    if (s == 0.0) {
      phases.push_back(Phase::Periodic);
    } else if (s == 0.5) {
      phases.push_back(Phase::Antiperiodic);
    } else {
      throw ConfigurationError("spin structure shifts must be 0 or 1/2");
    }
  }
  return SpinStructure(phases);
}

std::vector<SpinStructure> SpinStructure::all(int dim) {
  std::vector<SpinStructure> out;
  for (int mask = 0; mask < (1 << dim); ++mask) {
    std::vector<Phase> p;
    for (int a = 0; a < dim; ++a) p.push_back((mask >> (dim - 1 - a)) & 1 ? Phase::Antiperiodic : Phase::Periodic);
    out.emplace_back(p);
  }
  return out;
}

bool SpinStructure::operator==(const SpinStructure& other) const {
  if (dim_ != other.dim_) return false;
  for (int a = 0; a < dim_; ++a)
    if (phases_[a] != other.phases_[a]) return false;
  return true;
}

CliffordRep make_clifford(int dim) {
  if (dim != 2 && dim != 3) throw DimensionError("Clifford representation only for m = 2 or 3");
  const cplx I(0.0, 1.0);
  Eigen::Matrix2cd s1, s2, s3;
  s1 << 0, 1, 1, 0;
  s2 << 0, -I, I, 0;
  s3 << 1, 0, 0, -1;
  CliffordRep rep;
  rep.dim = dim;
  // gamma_j = i sigma_j: anti-Hermitian with gamma_j^2 = -1.
  rep.gamma = {I * s1, I * s2};
  if (dim == 3) rep.gamma.push_back(I * s3);
  if (dim == 2) {
    rep.chirality = rep.gamma[0] * rep.gamma[1];
    rep.has_chirality = true;
  }
  return rep;
}

Eigen::MatrixXcd axis_derivative_matrix(int n, double length, Phase phase, Stencil stencil) {
  if (n % 2 != 0) throw ConfigurationError("derivative needs an even number of points");
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(n, n);
  if (stencil == Stencil::CentralDifference) {
    const double h = length / n;
    const double wrap = phase == Phase::Antiperiodic ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) {
      int up = (j + 1) % n;
      int down = (j - 1 + n) % n;
      d(j, up) += (j == n - 1 ? wrap : 1.0) / (2.0 * h);
      d(j, down) -= (j == 0 ? wrap : 1.0) / (2.0 * h);
    }
    return d;
  }

  // Modes e^{i 2 pi (k + delta) x / L}, k = -n/2 .. n/2 - 1, each multiplied by
  // i (k + delta) 2 pi / L. The matrix depends only on the displacement j = x - y.
  const int twice_delta = phase == Phase::Antiperiodic ? 1 : 0;
  const double unit = 2.0 * std::numbers::pi / length;
  std::vector<cplx> c(n);
  for (int j = 0; j < n; ++j) {
    cplx acc = 0.0;
    for (int k = -n / 2; k < n / 2; ++k) {
      long long num = static_cast<long long>(2 * k + twice_delta) * j;  // angle = pi * num / n
      long long r = ((num % (2LL * n)) + 2LL * n) % (2LL * n);
      double ang = std::numbers::pi * static_cast<double>(r) / n;
      double w = (k + 0.5 * twice_delta) * unit;
      acc += cplx(0.0, w) * cplx(std::cos(ang), std::sin(ang));
    }
    c[j] = acc / static_cast<double>(n);
  }
  c[0] = cplx(0.0, c[0].imag());
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      int j = x - y;
      d(x, y) = j >= 0 ? c[j] : -std::conj(c[-j]);
    }
  }
  return d;
}

Derivatives::Derivatives(const Lattice& lattice, Stencil stencil) : lattice_(lattice), stencil_(stencil) {
  for (int a = 0; a < lattice.dim(); ++a) {
    int n = lattice.points(a);
    double len = lattice.length(a);
    std::array<Eigen::MatrixXcd, 2> pair{axis_derivative_matrix(n, len, Phase::Periodic, stencil),
                                          axis_derivative_matrix(n, len, Phase::Antiperiodic, stencil)};
    real_.push_back(pair[0].real());
    complex_.push_back(std::move(pair));
  }
}

const Eigen::MatrixXcd& Derivatives::matrix(int axis, Phase phase) const {
  return complex_.at(axis)[phase == Phase::Antiperiodic ? 1 : 0];
}

namespace {

template <typename Scalar, typename Mat>
void apply_along_axis(const Lattice& lat, const Mat& d, std::span<const Scalar> in, std::span<Scalar> out,
                      int comps, int axis) {
  using Block = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const int n = lat.points(axis);
  const std::size_t stride = lat.stride(axis);
  const std::size_t c = static_cast<std::size_t>(comps);
  if (in.size() != lat.sites() * c || out.size() != in.size())
    throw ContractViolation("field size does not match lattice");
  Block line(n, comps);
  Block result(n, comps);
  for (std::size_t base = 0; base < lat.sites(); ++base) {
    if (lat.coords(base)[axis] != 0) continue;
    for (int j = 0; j < n; ++j) {
      const Scalar* src = in.data() + (base + j * stride) * c;
      for (int k = 0; k < comps; ++k) line(j, k) = src[k];
    }
    result.noalias() = d * line;
    for (int j = 0; j < n; ++j) {
      Scalar* dst = out.data() + (base + j * stride) * c;
      for (int k = 0; k < comps; ++k) dst[k] = result(j, k);
    }
  }
}

}  // namespace

void Derivatives::apply(std::span<const cplx> in, std::span<cplx> out, int components, int axis,
                        Phase phase) const {
  apply_along_axis<cplx>(lattice_, matrix(axis, phase), in, out, components, axis);
}

void Derivatives::apply(std::span<const double> in, std::span<double> out, int components, int axis) const {
  apply_along_axis<double>(lattice_, real_matrix(axis), in, out, components, axis);
}

std::vector<cplx> spectral_derivative(const Lattice& lattice, std::span<const cplx> field, int components,
                                      int axis, Phase phase) {
  if (axis < 0 || axis >= lattice.dim()) throw ContractViolation("axis out of range");
  std::vector<cplx> out(field.size());
  auto d = axis_derivative_matrix(lattice.points(axis), lattice.length(axis), phase, Stencil::Spectral);
  apply_along_axis<cplx>(lattice, d, field, std::span<cplx>(out), components, axis);
  return out;
}

std::vector<cplx> central_difference_derivative(const Lattice& lattice, std::span<const cplx> field,
                                                int components, int axis, Phase phase) {
  if (axis < 0 || axis >= lattice.dim()) throw ContractViolation("axis out of range");
  std::vector<cplx> out(field.size());
  auto d = axis_derivative_matrix(lattice.points(axis), lattice.length(axis), phase, Stencil::CentralDifference);
  apply_along_axis<cplx>(lattice, d, field, std::span<cplx>(out), components, axis);
  return out;
}

double lattice_inner(const Lattice& lattice, std::span<const cplx> a, std::span<const cplx> b) {
  if (a.size() != b.size()) throw ContractViolation("inner product of mismatched fields");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
  return acc * lattice.cell_volume();
}

double lattice_inner(const Lattice& lattice, std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractViolation("inner product of mismatched fields");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc * lattice.cell_volume();
}

cplx lattice_hermitian(const Lattice& lattice, std::span<const cplx> a, std::span<const cplx> b) {
  if (a.size() != b.size()) throw ContractViolation("inner product of mismatched fields");
  cplx acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc * lattice.cell_volume();
}

}  // namespace dhm
