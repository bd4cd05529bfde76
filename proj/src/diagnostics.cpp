#include "dhm/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "dhm/dirac.hpp"
#include "dhm/errors.hpp"

namespace dhm {

namespace {

double min_spacing(const Lattice& lat) {
  double h = lat.spacing(0);
  for (int i = 1; i < lat.dim(); ++i) h = std::min(h, lat.spacing(i));
  return h;
}

bool uniform_spacing(const Lattice& lat) {
  for (int i = 1; i < lat.dim(); ++i)
    if (lat.spacing(i) != lat.spacing(0)) return false;
  return true;
}

// Minimum-image offset count along one axis.
int image(int d, int n) {
  d = ((d % n) + n) % n;
  return std::min(d, n - d);
}

// Ball index k (>= 1) of the smallest radius k h with |d| < k h, for every displacement.
std::vector<int> shells(const Lattice& lat, double h) {
  std::vector<int> out(lat.sites());
  const bool uniform = uniform_spacing(lat);
  for (std::size_t s = 0; s < lat.sites(); ++s) {
    auto c = lat.coords(s);
    if (uniform) {
      long long d2 = 0;
      for (int i = 0; i < lat.dim(); ++i) {
        long long k = image(c[i], lat.points(i));
        d2 += k * k;
      }
      long long r = static_cast<long long>(std::sqrt(static_cast<double>(d2)));
      while (r * r > d2) --r;
      while ((r + 1) * (r + 1) <= d2) ++r;
      out[s] = static_cast<int>(r) + 1;  // r <= |d|/h < r + 1
    } else {
      double d2 = 0.0;
      for (int i = 0; i < lat.dim(); ++i) {
        double x = image(c[i], lat.points(i)) * lat.spacing(i);
        d2 += x * x;
      }
      out[s] = static_cast<int>(std::floor(std::sqrt(d2) / h + 1e-12)) + 1;
    }
  }
  return out;
}

}  // namespace

double covering_radius(const Lattice& lat) {
  double d2 = 0.0;
  for (int i = 0; i < lat.dim(); ++i) {
    double x = (lat.points(i) / 2) * lat.spacing(i);
    d2 += x * x;
  }
  const double h = min_spacing(lat);
  return (std::floor(std::sqrt(d2) / h + 1e-12) + 1.0) * h;
}

MorreyNorm morrey_norm_unchecked(const Lattice& lat, const Eigen::VectorXd& magnitude, double p, double lambda,
                                 double max_radius) {
  if (static_cast<std::size_t>(magnitude.size()) != lat.sites()) throw DimensionError("Morrey field has wrong size");
  if (!(p >= 1.0)) throw ConfigurationError("Morrey exponent p must be >= 1");
  if (!(lambda > 0.0)) throw ConfigurationError("Morrey lambda must be positive");
  const double h = min_spacing(lat);
  const double rmax = max_radius > 0.0 ? max_radius : covering_radius(lat);
  const int kmax = static_cast<int>(std::floor(rmax / h + 1e-12));
  if (kmax < 1) throw ConfigurationError("Morrey ball set is empty: radius below the lattice spacing");
  const int m = lat.dim();
  std::vector<int> shell = shells(lat, h);
  std::vector<double> fp(lat.sites());
  for (std::size_t s = 0; s < lat.sites(); ++s) fp[s] = std::pow(std::abs(magnitude(static_cast<Eigen::Index>(s))), p);
  std::vector<double> weight(static_cast<std::size_t>(kmax) + 1);
  for (int k = 1; k <= kmax; ++k) weight[static_cast<std::size_t>(k)] = std::pow(k * h, lambda - m) * lat.cell_volume();

  // Displacements inside the largest ball, sorted by shell.
  struct Offset {
    std::array<int, 3> d;
    int k;
  };
  std::vector<Offset> offsets;
  for (std::size_t d = 0; d < lat.sites(); ++d)
    if (shell[d] <= kmax) offsets.push_back({lat.coords(d), shell[d]});
  std::stable_sort(offsets.begin(), offsets.end(), [](const Offset& a, const Offset& b) { return a.k < b.k; });

  MorreyNorm best{p, lambda, -1.0, 0, 0.0};
  std::array<int, 3> n{1, 1, 1};
  for (int i = 0; i < m; ++i) n[i] = lat.points(i);
  for (std::size_t c = 0; c < lat.sites(); ++c) {
    auto cc = lat.coords(c);
    double acc = 0.0;
    for (std::size_t j = 0; j < offsets.size(); ++j) {
      const Offset& o = offsets[j];
      std::size_t idx = 0;
      for (int i = 0; i < m; ++i) {
        int x = cc[i] + o.d[i];
        if (x >= n[i]) x -= n[i];
        idx += static_cast<std::size_t>(x) * lat.stride(i);
      }
      acc += fp[idx];
      if (j + 1 < offsets.size() && offsets[j + 1].k == o.k) continue;
      // Ball k h is complete; radii with no new sites repeat the previous sum.
      const int kend = j + 1 < offsets.size() ? offsets[j + 1].k - 1 : kmax;
      for (int k = o.k; k <= kend; ++k) {
        double v = weight[static_cast<std::size_t>(k)] * acc;
        if (v > best.value) {
          best.value = v;
          best.center = c;
          best.radius = k * h;
        }
      }
    }
  }
  best.value = std::pow(best.value, 1.0 / p);
  return best;
}

MorreyNorm morrey_norm(const Lattice& lat, const Eigen::VectorXd& magnitude, double p, double lambda,
                       double max_radius) {
  if (!(lambda > 0.0 && lambda <= lat.dim())) throw ConfigurationError("Morrey lambda must lie in (0, m]");
  return morrey_norm_unchecked(lat, magnitude, p, lambda, max_radius);
}

Eigen::VectorXd differential_magnitude(const MapField& phi) {
  return energy_density(differential(phi)).cwiseSqrt();
}

Eigen::VectorXd spinor_magnitude(const SpinorField& psi) {
  const auto& g = *psi.geom;
  Eigen::VectorXd out(static_cast<Eigen::Index>(g.sites()));
  for (std::size_t s = 0; s < g.sites(); ++s) out(static_cast<Eigen::Index>(s)) = psi.at(s).norm();
  return out;
}

SmallnessReport smallness_check(const MapField& phi, const SpinorField& psi, double epsilon, int s) {
  const Lattice& lat = phi.geometry()->lattice();
  const double h = min_spacing(lat);
  Eigen::VectorXd dphi = differential_magnitude(phi);
  Eigen::VectorXd spin = spinor_magnitude(psi);
  SmallnessReport rep;
  rep.epsilon = epsilon;
  rep.s = s;
  std::vector<double> radii{covering_radius(lat)};
  for (double r = std::floor(radii[0] / (2.0 * h)) * h; r >= h; r = std::floor(r / (2.0 * h)) * h) {
    radii.push_back(r);
    if (r == h) break;
  }
  for (double r : radii) {
    SmallnessRow row;
    row.radius = r;
    row.map_norm = morrey_norm_unchecked(lat, dphi, 2.0, 2.0, r).value;
    row.spinor_norm = morrey_norm_unchecked(lat, spin, 4.0, 2.0, r).value;
    row.sum = row.map_norm + row.spinor_norm;
    if (s > 4) row.spinor_high = morrey_norm_unchecked(lat, spin, 2.0, 2.0 * s - 2.0, r).value;
    rep.rows.push_back(row);
  }
  rep.satisfied_full = rep.rows.front().sum <= epsilon;
  for (const auto& row : rep.rows)
    if (row.sum <= epsilon) {
      rep.largest_radius = row.radius;
      break;
    }
  return rep;
}

CouplingEnergy coupling_energy(const MapField& phi, const SpinorField& psi) {
  CouplingEnergy e;
  Eigen::VectorXd sp = spinor_magnitude(psi);
  e.density = energy_density(differential(phi)) + sp.array().square().square().matrix();
  e.integral = e.density.sum() * phi.geometry()->lattice().cell_volume();
  return e;
}

SurrogateNorms surrogate_norms(const MapField& phi, const SpinorField& psi, int s) {
  const auto& g = *phi.geometry();
  const double vol = g.lattice().cell_volume();
  SurrogateNorms n;
  n.t = s > 4 ? s : 4;
  Eigen::VectorXd e = energy_density(differential(phi));
  double w12 = 0.0;
  for (std::size_t x = 0; x < g.sites(); ++x) w12 += phi.at(x).squaredNorm() + e(static_cast<Eigen::Index>(x));
  n.map_w12 = std::sqrt(w12 * vol);
  Eigen::VectorXd grad2 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.sites()));
  for (int i = 0; i < g.dim(); ++i) {
    SpinorField d = project_spinor_tangent(spinor_derivative(psi, i), phi);
    for (std::size_t x = 0; x < g.sites(); ++x) grad2(static_cast<Eigen::Index>(x)) += d.at(x).squaredNorm();
  }
  Eigen::VectorXd mag = spinor_magnitude(psi);
  double w = 0.0, lt = 0.0;
  for (std::size_t x = 0; x < g.sites(); ++x) {
    const auto i = static_cast<Eigen::Index>(x);
    w += std::pow(mag(i), 4.0 / 3.0) + std::pow(std::sqrt(grad2(i)), 4.0 / 3.0);
    lt += std::pow(mag(i), n.t);
  }
  n.spinor_w1_43 = std::pow(w * vol, 0.75);
  n.spinor_lt = std::pow(lt * vol, 1.0 / n.t);
  return n;
}

}  // namespace dhm
