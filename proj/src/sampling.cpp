#include "dhm/sampling.hpp"

#include <cmath>
#include <numbers>

#include "dhm/errors.hpp"

namespace dhm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Eigen::Matrix3d rot_z(double t) {
  Eigen::Matrix3d r;
  r << std::cos(t), -std::sin(t), 0, std::sin(t), std::cos(t), 0, 0, 0, 1;
  return r;
}

Eigen::Matrix3d rot_y(double t) {
  Eigen::Matrix3d r;
  r << std::cos(t), 0, std::sin(t), 0, 1, 0, -std::sin(t), 0, std::cos(t);
  return r;
}

// Wave vectors k in the box [lo, hi]^m.
template <typename F>
void for_each_wave(int m, int lo, int hi, F&& f) {
  std::array<int, 3> k{lo, lo, lo};
  for (int a = m; a < 3; ++a) k[a] = 0;
  while (true) {
    f(k);
    int a = m - 1;
    while (a >= 0 && k[a] == hi) {
      k[a] = lo;
      --a;
    }
    if (a < 0) break;
    ++k[a];
  }
}

}  // namespace

double Rng::uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u = 0.0;
  while (u <= 0.0) u = uniform();
  double v = uniform();
  double r = std::sqrt(-2.0 * std::log(u));
  spare_ = r * std::sin(kTwoPi * v);
  has_spare_ = true;
  return r * std::cos(kTwoPi * v);
}

int Rng::integer(int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<int>(eng_() % span);
}

MapField constant_map(GeometryPtr geom, const Eigen::VectorXd& y) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(geom->sites() * geom->q()));
  for (std::size_t s = 0; s < geom->sites(); ++s) v.segment(s * geom->q(), geom->q()) = y;
  return MapField(geom, v);
}

MapField equator_map(GeometryPtr geom) {
  if (geom->target().kind() != TargetKind::Sphere) throw ContractViolation("equator map needs a sphere target");
  const auto& lat = geom->lattice();
  const int q = geom->q();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(geom->sites() * q));
  for (std::size_t s = 0; s < geom->sites(); ++s) {
    double t = kTwoPi * lat.position(0, lat.coords(s)[0]) / lat.length(0);
    v(s * q) = std::cos(t);
    v(s * q + 1) = std::sin(t);
  }
  return MapField(geom, v);
}

MapField identity_torus_map(GeometryPtr geom) {
  if (geom->target().kind() != TargetKind::FlatTorus || geom->q() != geom->dim())
    throw ContractViolation("identity map needs a torus target with q = m");
  const auto& lat = geom->lattice();
  const int m = geom->dim();
  Eigen::VectorXd v(static_cast<Eigen::Index>(geom->sites() * m));
  Eigen::MatrixXi w = Eigen::MatrixXi::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    if (std::abs(lat.length(i) - kTwoPi) > 1e-12) throw ContractViolation("identity map needs side length 2 pi");
    w(i, i) = 1;
  }
  for (std::size_t s = 0; s < geom->sites(); ++s) {
    auto c = lat.coords(s);
    for (int i = 0; i < m; ++i) v(s * m + i) = lat.position(i, c[i]);
  }
  return MapField(geom, v, w);
}

FramedMap rotation_map(GeometryPtr geom, const std::array<int, 3>& k1, const std::array<int, 3>& k2, double a,
                       double b, const Eigen::Matrix3d& r0) {
  if (geom->target().kind() != TargetKind::Sphere || geom->q() != 3)
    throw ContractViolation("rotation map needs the target S^2");
  const auto& lat = geom->lattice();
  Eigen::VectorXd v(static_cast<Eigen::Index>(geom->sites() * 3));
  std::vector<Eigen::MatrixXd> frame;
  frame.reserve(geom->sites());
  for (std::size_t s = 0; s < geom->sites(); ++s) {
    auto c = lat.coords(s);
    double t1 = a, t2 = b;
    for (int i = 0; i < geom->dim(); ++i) {
      double x = kTwoPi * lat.position(i, c[i]) / lat.length(i);
      t1 += k1[i] * x;
      t2 += k2[i] * x;
    }
    Eigen::Matrix3d r = r0 * rot_z(t1) * rot_y(t2);
    v.segment(s * 3, 3) = r.col(2);
    frame.push_back(r.leftCols(2));
  }
  // Renormalize away rounding so the map sits on the sphere to machine precision.
  for (std::size_t s = 0; s < geom->sites(); ++s) v.segment(s * 3, 3).normalize();
  return {MapField(geom, v), std::move(frame)};
}

FramedMap random_rotation_map(GeometryPtr geom, Rng& rng, int max_wave) {
  std::array<int, 3> k1{0, 0, 0}, k2{0, 0, 0};
  for (int i = 0; i < geom->dim(); ++i) {
    k1[i] = rng.integer(-max_wave, max_wave);
    k2[i] = rng.integer(-max_wave, max_wave);
  }
  double a = rng.uniform(0.0, kTwoPi);
  double b = rng.uniform(0.0, kTwoPi);
  Eigen::Matrix3d g;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::Matrix3d> qr(g);
  Eigen::Matrix3d r0 = qr.householderQ();
  if (r0.determinant() < 0) r0.col(0) *= -1.0;
  return rotation_map(geom, k1, k2, a, b, r0);
}

MapField random_torus_map(GeometryPtr geom, Rng& rng, int max_wave, double amplitude, const Eigen::MatrixXi& winding) {
  if (geom->target().kind() != TargetKind::FlatTorus) throw ContractViolation("torus map needs a torus target");
  const auto& lat = geom->lattice();
  const int q = geom->q();
  const int m = geom->dim();
  Eigen::MatrixXi w = winding.size() ? winding : Eigen::MatrixXi::Zero(q, m);
  if (w.rows() != q || w.cols() != m) throw DimensionError("winding must be q x m");
  Eigen::VectorXd v = smooth_real_field(lat, rng, q, max_wave);
  const double peak = v.cwiseAbs().maxCoeff();
  if (peak > 0.0) v *= amplitude / peak;
  for (std::size_t s = 0; s < geom->sites(); ++s) {
    auto c = lat.coords(s);
    for (int a = 0; a < q; ++a)
      for (int i = 0; i < m; ++i) v(s * q + a) += kTwoPi * w(a, i) * lat.position(i, c[i]) / lat.length(i);
  }
  return MapField(geom, v, w);
}

Eigen::VectorXd smooth_real_field(const Lattice& lat, Rng& rng, int comps, int max_wave) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lat.sites() * comps));
  const int m = lat.dim();
  for_each_wave(m, -max_wave, max_wave, [&](const std::array<int, 3>& k) {
    double k2 = 0.0;
    for (int i = 0; i < m; ++i) k2 += k[i] * k[i];
    const double scale = 1.0 / (1.0 + k2);
    for (int c = 0; c < comps; ++c) {
      double ca = rng.normal() * scale, sa = rng.normal() * scale;
      for (std::size_t s = 0; s < lat.sites(); ++s) {
        auto x = lat.coords(s);
        double th = 0.0;
        for (int i = 0; i < m; ++i) th += kTwoPi * k[i] * lat.position(i, x[i]) / lat.length(i);
        out(s * comps + c) += ca * std::cos(th) + sa * std::sin(th);
      }
    }
  });
  return out;
}

Eigen::VectorXcd smooth_spinor_field(const Lattice& lat, const SpinStructure& spin, Rng& rng, int comps,
                                     int max_wave) {
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(lat.sites() * comps));
  const int m = lat.dim();
  // Box chosen symmetric in k + delta: periodic axes use [-K, K], antiperiodic [-K, K - 1].
  for_each_wave(m, -max_wave, max_wave, [&](const std::array<int, 3>& k) {
    double p2 = 0.0;
    for (int i = 0; i < m; ++i) {
      if (spin.phase(i) == Phase::Antiperiodic && k[i] == max_wave) return;
      double p = k[i] + spin.shift(i);
      p2 += p * p;
    }
    const double scale = 1.0 / (1.0 + p2);
    for (int c = 0; c < comps; ++c) {
      cplx coef(rng.normal() * scale, rng.normal() * scale);
      for (std::size_t s = 0; s < lat.sites(); ++s) {
        auto x = lat.coords(s);
        double th = 0.0;
        for (int i = 0; i < m; ++i) th += kTwoPi * (k[i] + spin.shift(i)) * lat.position(i, x[i]) / lat.length(i);
        out(s * comps + c) += coef * cplx(std::cos(th), std::sin(th));
      }
    }
  });
  return out;
}

TangentField random_tangent_field(const MapField& phi, Rng& rng, int max_wave) {
  const auto& g = *phi.geometry();
  TangentField raw = TangentField::zero(phi.geometry());
  if (max_wave < 0) {
    for (Eigen::Index i = 0; i < raw.values.size(); ++i) raw.values(i) = rng.normal();
  } else {
    raw.values = smooth_real_field(g.lattice(), rng, g.q(), max_wave);
  }
  return project_tangent(raw, phi);
}

SpinorField random_spinor_field(const MapField& phi, Rng& rng, int max_wave) {
  const auto& g = *phi.geometry();
  SpinorField raw = SpinorField::zero(phi.geometry());
  if (max_wave < 0) {
    for (Eigen::Index i = 0; i < raw.values.size(); ++i) raw.values(i) = cplx(rng.normal(), rng.normal());
  } else {
    raw.values = smooth_spinor_field(g.lattice(), g.spin(), rng, g.spinor_components(), max_wave);
  }
  return project_spinor_tangent(raw, phi);
}

SpinorField random_frame_spinor(const FramedMap& fm, Rng& rng, int max_wave) {
  const auto& g = *fm.map.geometry();
  const int td = static_cast<int>(fm.frame.front().cols());
  const int ds = g.spinor_dim();
  Eigen::VectorXcd c = smooth_spinor_field(g.lattice(), g.spin(), rng, td * ds, max_wave);
  SpinorField psi = SpinorField::zero(fm.map.geometry());
  for (std::size_t s = 0; s < g.sites(); ++s) {
    Eigen::Map<const Eigen::MatrixXcd> cs(c.data() + s * td * ds, ds, td);
    psi.at(s) = cs * fm.frame[s].transpose().cast<cplx>();
  }
  return psi;
}

PlaneWave plane_wave_spinor(const Lattice& lat, const SpinStructure& spin, const CliffordRep& cl,
                            const std::array<int, 3>& k, int sign, int branch) {
  const int m = lat.dim();
  Eigen::Matrix2cd mult = Eigen::Matrix2cd::Zero();
  std::array<double, 3> p{0, 0, 0};
  for (int i = 0; i < m; ++i) {
    p[i] = (k[i] + spin.shift(i)) * kTwoPi / lat.length(i);
    mult += cplx(0.0, p[i]) * cl.gamma[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(mult);
  Eigen::Vector2cd u;
  double lam;
  if (es.eigenvalues().cwiseAbs().maxCoeff() < 1e-14) {
    u = Eigen::Vector2cd::Unit(branch == 0 ? 0 : 1);
    lam = 0.0;
  } else {
    int idx = sign > 0 ? 1 : 0;
    u = es.eigenvectors().col(idx);
    lam = es.eigenvalues()(idx);
  }
  PlaneWave pw;
  pw.eigenvalue = lam;
  pw.values.resize(static_cast<Eigen::Index>(lat.sites() * 2));
  const double norm = 1.0 / std::sqrt(lat.volume());
  for (std::size_t s = 0; s < lat.sites(); ++s) {
    auto x = lat.coords(s);
    double th = 0.0;
    for (int i = 0; i < m; ++i) th += p[i] * lat.position(i, x[i]);
    pw.values.segment(s * 2, 2) = norm * cplx(std::cos(th), std::sin(th)) * u;
  }
  return pw;
}

SpinorField tensor_spinor(GeometryPtr geom, const Eigen::VectorXcd& chi, const Eigen::VectorXd& t) {
  SpinorField psi = SpinorField::zero(geom);
  const int ds = geom->spinor_dim();
  for (std::size_t s = 0; s < geom->sites(); ++s)
    psi.at(s) = chi.segment(s * ds, ds) * t.transpose().cast<cplx>();
  return psi;
}

}  // namespace dhm
