#include "dhm/variational.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dhm/dirac.hpp"
#include "dhm/errors.hpp"

namespace dhm {

namespace {

TangentField derive(const TangentField& f, int axis) {
  TangentField out = TangentField::zero(f.geom);
  f.geom->derivatives().apply(as_span(f.values), as_mut_span(out.values), f.geom->q(), axis);
  return out;
}

double re_pair(const Eigen::Ref<const Eigen::MatrixXcd>& a, const Eigen::Ref<const Eigen::MatrixXcd>& b) {
  return (a.conjugate().cwiseProduct(b)).sum().real();
}

// K_i(site) = Re<a^alpha, gamma_i b^beta>.
std::vector<std::vector<Eigen::MatrixXd>> pairings(const SpinorField& a, const SpinorField& b) {
  const auto& g = *a.geom;
  std::vector<std::vector<Eigen::MatrixXd>> k(g.sites());
  for (std::size_t s = 0; s < g.sites(); ++s)
    for (int i = 0; i < g.dim(); ++i) k[s].push_back(spinor_pairing(a.at(s), g.clifford().gamma[i], b.at(s)));
  return k;
}

void check_critical(const MapField& phi, const SpinorField& psi, const Potential& v, double tol) {
  ELResidual r = el_residual(phi, psi, v);
  if (r.map_norm > tol || r.spinor_norm > tol)
    throw NotCritical("input is not a critical point: map residual " + std::to_string(r.map_norm) +
                          ", spinor residual " + std::to_string(r.spinor_norm),
                      r.map_norm, r.spinor_norm);
}

}  // namespace

TangentField tension(const MapField& phi) {
  const auto& g = *phi.geometry();
  TangentField lap = TangentField::zero(phi.geometry());
  for (int i = 0; i < g.dim(); ++i) lap.values += derive(map_derivative(phi, i), i).values;
  return project_tangent(lap, phi);
}

TangentField curvature_coupling(const MapField& phi, const SpinorField& psi) {
  const auto& g = *phi.geometry();
  TangentField out = TangentField::zero(phi.geometry());
  const double kappa = g.target().curvature();
  if (kappa == 0.0) return out;
  auto dphi = differential(phi);
  for (std::size_t s = 0; s < g.sites(); ++s)
    for (int i = 0; i < g.dim(); ++i)
      out.at(s) += kappa * spinor_pairing(psi.at(s), g.clifford().gamma[i], psi.at(s)) * dphi[i].at(s);
  return out;
}

ELResidual el_residual(const MapField& phi, const SpinorField& psi, const Potential& v) {
  TangentField map_res = tension(phi);
  map_res.values -= curvature_coupling(phi, psi).values;
  map_res.values += v.grad_map(phi, psi).values;
  SpinorField spin_res = TwistedDirac(phi).apply_unchecked(psi);
  spin_res.values -= v.grad_spinor(phi, psi).values;
  ELResidual r{map_res, spin_res, l2_norm(map_res), l2_norm(spin_res)};
  return r;
}

ExtrinsicCoefficients extrinsic_coefficients(const MapField& phi, const SpinorField& psi) {
  const auto& g = *phi.geometry();
  if (g.target().kind() != TargetKind::Sphere) throw Unsupported("extrinsic system implemented for sphere targets");
  const int q = g.q();
  const int ds = g.spinor_dim();
  std::vector<TangentField> dphi;
  for (int i = 0; i < g.dim(); ++i) dphi.push_back(map_derivative(phi, i));
  ExtrinsicCoefficients c;
  c.omega.resize(g.sites());
  c.f.resize(g.sites());
  c.a.resize(g.sites());
  for (std::size_t s = 0; s < g.sites(); ++s) {
    Eigen::VectorXd y = phi.at(s);
    Eigen::MatrixXd top = g.target().projector(y);
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(ds * q, ds * q);
    for (int i = 0; i < g.dim(); ++i) {
      Eigen::VectorXd d = dphi[i].at(s);
      c.omega[s].push_back(d * y.transpose() - y * d.transpose());
      Eigen::MatrixXd k = top * spinor_pairing(psi.at(s), g.clifford().gamma[i], psi.at(s)) * top;
      c.f[s].push_back(0.5 * (k - k.transpose()));
      for (int al = 0; al < q; ++al)
        for (int be = 0; be < q; ++be) a.block(al * ds, be * ds, ds, ds) -= y(al) * d(be) * g.clifford().gamma[i];
    }
    c.a[s] = a;
  }
  return c;
}

ExtrinsicResidual el_residual_extrinsic(const MapField& phi, const SpinorField& psi, const Potential& v) {
  const auto& g = *phi.geometry();
  ExtrinsicCoefficients c = extrinsic_coefficients(phi, psi);
  const int q = g.q();
  const int ds = g.spinor_dim();
  const int m = g.dim();
  ExtrinsicResidual out;

  TangentField lap = TangentField::zero(phi.geometry());
  std::vector<TangentField> dphi;
  for (int i = 0; i < m; ++i) {
    dphi.push_back(map_derivative(phi, i));
    lap.values += derive(dphi.back(), i).values;
  }
  TangentField map_res = lap;
  for (std::size_t s = 0; s < g.sites(); ++s) {
    double omega_sq = 0.0;
    double dphi_sq = 0.0;
    for (int i = 0; i < m; ++i) {
      Eigen::MatrixXd om = c.omega[s][i] + c.f[s][i];
      map_res.at(s) -= om * dphi[i].at(s);
      out.antisymmetry_defect = std::max(out.antisymmetry_defect, (om + om.transpose()).cwiseAbs().maxCoeff());
      omega_sq += om.squaredNorm();
      dphi_sq += dphi[i].at(s).squaredNorm();
    }
    const double r = psi.at(s).squaredNorm();
    const double bound = 4.0 * dphi_sq + 2.0 * m * r * r;
    if (bound > 0.0) out.omega_bound_ratio = std::max(out.omega_bound_ratio, omega_sq / bound);
    else if (omega_sq > 0.0) out.omega_bound_ratio = std::numeric_limits<double>::infinity();
    const double an = c.a[s].norm();
    const double ab = std::sqrt(static_cast<double>(ds) * dphi_sq);
    if (ab > 0.0) out.a_bound_ratio = std::max(out.a_bound_ratio, an / ab);
    else if (an > 0.0) out.a_bound_ratio = std::numeric_limits<double>::infinity();
  }
  map_res.values += v.grad_map(phi, psi).values;

  SpinorField spin_res = UntwistedDirac(phi.geometry()).apply(psi);
  Eigen::VectorXcd flat(ds * q);
  for (std::size_t s = 0; s < g.sites(); ++s) {
    auto blk = psi.at(s);
    for (int al = 0; al < q; ++al) flat.segment(al * ds, ds) = blk.col(al);
    Eigen::VectorXcd ap = c.a[s] * flat;
    auto out_blk = spin_res.at(s);
    for (int al = 0; al < q; ++al) out_blk.col(al) -= ap.segment(al * ds, ds);
  }
  spin_res.values -= v.grad_spinor(phi, psi).values;

  out.residual = ELResidual{map_res, spin_res, l2_norm(map_res), l2_norm(spin_res)};
  out.bounds_hold = out.omega_bound_ratio <= 1.0 + 1e-10 && out.a_bound_ratio <= 1.0 + 1e-10;
  return out;
}

MapField varied_map(const MapField& phi, const TangentField& eta, double t) {
  Eigen::VectorXd raw = phi.values() + t * eta.values;
  return project_to_target(phi.geometry(), raw, phi.winding());
}

SpinorField varied_spinor(const SpinorField& psi, const SpinorField& xi, const MapField& phi_t, double t) {
  SpinorField raw{psi.geom, psi.values + t * xi.values};
  return project_spinor_tangent(raw, phi_t);
}

double action_along_path(const MapField& phi, const SpinorField& psi, const Potential& v, const TangentField& eta,
                         const SpinorField& xi, double t) {
  MapField pt = varied_map(phi, eta, t);
  return action(pt, varied_spinor(psi, xi, pt, t), v);
}

FirstVariation first_variation_check(const MapField& phi, const SpinorField& psi, const Potential& v,
                                     const TangentField& eta, const SpinorField& xi, double t) {
  if (tangent_defect(eta, phi) > 1e-10 || spinor_tangency_defect(xi, phi) > 1e-10)
    throw ContractViolation("first variation: directions must be tangent");
  ELResidual r = el_residual(phi, psi, v);
  FirstVariation fv;
  fv.analytic = -2.0 * l2_inner(r.map_residual, eta) + 2.0 * l2_inner(r.spinor_residual, xi);
  fv.numeric = (action_along_path(phi, psi, v, eta, xi, t) - action_along_path(phi, psi, v, eta, xi, -t)) / (2.0 * t);
  return fv;
}

Eigen::VectorXd StressEnergy::trace() const {
  Eigen::VectorXd t(static_cast<Eigen::Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) t(i) = s[i].trace();
  return t;
}

double StressEnergy::symmetry_defect() const {
  double d = 0.0;
  for (const auto& m : s) d = std::max(d, (m - m.transpose()).cwiseAbs().maxCoeff());
  return d;
}

StressEnergy stress_energy(const MapField& phi, const SpinorField& psi, const Potential& v) {
  const auto& g = *phi.geometry();
  const int m = g.dim();
  auto dphi = differential(phi);
  std::vector<SpinorField> nab;
  for (int i = 0; i < m; ++i) nab.push_back(project_spinor_tangent(spinor_derivative(psi, i), phi));
  Eigen::VectorXd vd = v.density(phi, psi);
  StressEnergy out{phi.geometry(), {}};
  out.s.reserve(g.sites());
  for (std::size_t x = 0; x < g.sites(); ++x) {
    auto p = psi.at(x);
    Eigen::MatrixXd gradterm(m, m);
    double e = 0.0;
    for (int i = 0; i < m; ++i) e += dphi[i].at(x).squaredNorm();
    Eigen::MatrixXd sp(m, m);  // Re<psi, e_i . nabla_j psi>
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        gradterm(i, j) = dphi[i].at(x).dot(dphi[j].at(x));
        sp(i, j) = re_pair(p, g.clifford().gamma[i] * nab[j].at(x));
      }
    const double dirac = sp.trace();
    Eigen::MatrixXd s = 2.0 * gradterm + 0.5 * (sp + sp.transpose());
    s.diagonal().array() += -e - dirac + 2.0 * vd(x);
    out.s.push_back(s);
  }
  return out;
}

Eigen::VectorXd stress_trace_formula(const MapField& phi, const SpinorField& psi, const Potential& v) {
  const int m = phi.geometry()->dim();
  Eigen::VectorXd e = energy_density(differential(phi));
  Eigen::VectorXd d = dirac_density(psi, TwistedDirac(phi).apply_unchecked(psi));
  Eigen::VectorXd vd = v.density(phi, psi);
  return (2.0 - m) * e + (1.0 - m) * d + 2.0 * m * vd;
}

Eigen::MatrixXd divergence_stress_energy(const StressEnergy& st) {
  const auto& g = *st.geom;
  const int m = g.dim();
  const auto n = static_cast<Eigen::Index>(g.sites());
  Eigen::MatrixXd div = Eigen::MatrixXd::Zero(n, m);
  Eigen::VectorXd f(n), df(n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      for (Eigen::Index x = 0; x < n; ++x) f(x) = st.s[x](i, j);
      g.derivatives().apply(as_span(f), as_mut_span(df), 1, j);
      div.col(i) += df;
    }
  return div;
}

double second_variation_form(const MapField& phi, const SpinorField& psi, const Potential& v,
                             const TangentField& eta, const SpinorField& xi) {
  const auto& g = *phi.geometry();
  const int m = g.dim();
  const double kappa = g.target().curvature();
  auto dphi = differential(phi);
  auto k = pairings(psi, psi);
  auto kx = pairings(xi, psi);
  std::vector<TangentField> neta;
  for (int i = 0; i < m; ++i) neta.push_back(project_tangent(derive(eta, i), phi));

  double t1 = 0.0, t2 = 0.0, t5 = 0.0, t6 = 0.0;
  for (std::size_t s = 0; s < g.sites(); ++s) {
    Eigen::VectorXd e = eta.at(s);
    for (int i = 0; i < m; ++i) {
      Eigen::VectorXd d = dphi[i].at(s);
      t1 += neta[i].at(s).squaredNorm();
      t2 -= kappa * (d.squaredNorm() * e.squaredNorm() - std::pow(e.dot(d), 2));
      t5 += 2.0 * kappa * e.dot((kx[s][i] - kx[s][i].transpose()) * d);
      t6 += kappa * e.dot(k[s][i] * neta[i].at(s));
    }
  }
  const double w = g.lattice().cell_volume();
  double total = (t1 + t2 + t5 + t6) * w;
  total += l2_inner(xi, TwistedDirac(phi).apply_unchecked(xi));
  total -= l2_inner(eta, v.hessian_map(phi, psi, eta));
  total -= v.iota_xi_xi(phi, psi, xi).sum() * w;
  total -= 2.0 * l2_inner(eta, v.iota_xi_grad(phi, psi, xi));
  return 2.0 * total;
}

double second_variation(const MapField& phi, const SpinorField& psi, const Potential& v, const TangentField& eta,
                        const SpinorField& xi, double criticality_tol) {
  check_critical(phi, psi, v, criticality_tol);
  return second_variation_form(phi, psi, v, eta, xi);
}

namespace {

class JacobiContext {
 public:
  JacobiContext(const MapField& phi, const SpinorField& psi, const Potential& v)
      : phi_(phi), psi_(psi), v_(v), dirac_(phi), dphi_(differential(phi)), k_(pairings(psi, psi)) {}

  JacobiAction apply(const TangentField& eta, const SpinorField& xi) const {
    const auto& g = *phi_.geometry();
    const int m = g.dim();
    const double kappa = g.target().curvature();
    TangentField he = TangentField::zero(phi_.geometry());
    for (int i = 0; i < m; ++i) {
      TangentField d = project_tangent(derive(eta, i), phi_);
      he.values -= 2.0 * derive(d, i).values;
      if (kappa != 0.0) {
        TangentField ke = TangentField::zero(phi_.geometry());
        for (std::size_t s = 0; s < g.sites(); ++s) {
          ke.at(s) = k_[s][i] * eta.at(s);
          he.at(s) += kappa * (k_[s][i] * d.at(s));
        }
        he.values += kappa * derive(ke, i).values;
      }
    }
    SpinorField hx = dirac_.apply_unchecked(xi);
    hx.values *= 2.0;
    if (kappa != 0.0) {
      for (std::size_t s = 0; s < g.sites(); ++s) {
        Eigen::VectorXd e = eta.at(s);
        auto p = psi_.at(s);
        Eigen::VectorXcd pe = p * e.cast<cplx>();
        for (int i = 0; i < m; ++i) {
          Eigen::VectorXd d = dphi_[i].at(s);
          const Eigen::Matrix2cd& gm = g.clifford().gamma[i];
          he.at(s) -= 2.0 * kappa * (d.squaredNorm() * e - e.dot(d) * d);
          Eigen::MatrixXd kx = spinor_pairing(xi.at(s), gm, p);
          he.at(s) += 2.0 * kappa * (kx - kx.transpose()) * d;
          Eigen::VectorXcd pd = p * d.cast<cplx>();
          hx.at(s) += 2.0 * kappa * gm * (pd * e.transpose().cast<cplx>() - pe * d.transpose().cast<cplx>());
        }
      }
    }
    he.values -= 2.0 * v_.hessian_map(phi_, psi_, eta).values;
    he.values -= 2.0 * v_.iota_xi_grad(phi_, psi_, xi).values;
    hx.values -= 2.0 * v_.spinor_linearization(phi_, psi_, xi).values;
    hx.values -= 2.0 * v_.mixed_spinor(phi_, psi_, eta).values;
    return {project_tangent(he, phi_), project_spinor_tangent(hx, phi_)};
  }

 private:
  const MapField& phi_;
  const SpinorField& psi_;
  const Potential& v_;
  TwistedDirac dirac_;
  std::vector<TangentField> dphi_;
  std::vector<std::vector<Eigen::MatrixXd>> k_;
};

}  // namespace

JacobiAction jacobi_apply(const MapField& phi, const SpinorField& psi, const Potential& v, const TangentField& eta,
                          const SpinorField& xi) {
  return JacobiContext(phi, psi, v).apply(eta, xi);
}

Eigen::VectorXd JacobiMatrix::to_coordinates(const TangentField& eta, const SpinorField& xi) const {
  const auto& g = *geom;
  const int td = g.target().dim();
  const int ds = g.spinor_dim();
  const double w = std::sqrt(g.lattice().cell_volume());
  Eigen::VectorXd c(static_cast<Eigen::Index>(map_block + spinor_block));
  for (std::size_t s = 0; s < g.sites(); ++s) {
    c.segment(s * td, td) = w * basis[s].transpose() * eta.at(s);
    Eigen::MatrixXcd cs = xi.at(s) * basis[s].cast<cplx>();
    for (int a = 0; a < td; ++a)
      for (int r = 0; r < ds; ++r) {
        std::size_t idx = map_block + ((s * td + a) * ds + r) * 2;
        c(idx) = w * cs(r, a).real();
        c(idx + 1) = w * cs(r, a).imag();
      }
  }
  return c;
}

JacobiAction JacobiMatrix::from_coordinates(const Eigen::VectorXd& c) const {
  const auto& g = *geom;
  const int td = g.target().dim();
  const int ds = g.spinor_dim();
  const double w = 1.0 / std::sqrt(g.lattice().cell_volume());
  JacobiAction out{TangentField::zero(geom), SpinorField::zero(geom)};
  for (std::size_t s = 0; s < g.sites(); ++s) {
    out.eta.at(s) = w * basis[s] * c.segment(s * td, td);
    Eigen::MatrixXcd cs(ds, td);
    for (int a = 0; a < td; ++a)
      for (int r = 0; r < ds; ++r) {
        std::size_t idx = map_block + ((s * td + a) * ds + r) * 2;
        cs(r, a) = w * cplx(c(idx), c(idx + 1));
      }
    out.xi.at(s) = cs * basis[s].transpose().cast<cplx>();
  }
  return out;
}

double JacobiMatrix::symmetry_defect() const {
  const double n = matrix.norm();
  return n > 0.0 ? (matrix - matrix.transpose()).norm() / n : 0.0;
}

JacobiMatrix jacobi_matrix(const MapField& phi, const SpinorField& psi, const Potential& v, double criticality_tol) {
  check_critical(phi, psi, v, criticality_tol);
  const auto& g = *phi.geometry();
  const int td = g.target().dim();
  const int ds = g.spinor_dim();
  JacobiMatrix jm;
  jm.geom = phi.geometry();
  jm.map_block = g.sites() * td;
  jm.spinor_block = g.sites() * td * ds * 2;
  const std::size_t n = jm.map_block + jm.spinor_block;
  if (n > kDenseJacobiCap) throw Unsupported("Jacobi matrix above dense size cap; use jacobi_apply");
  for (std::size_t s = 0; s < g.sites(); ++s) jm.basis.push_back(g.target().tangent_basis(phi.at(s)));

  JacobiContext ctx(phi, psi, v);
  jm.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  Eigen::VectorXd unit = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    unit(j) = 1.0;
    JacobiAction dir = jm.from_coordinates(unit);
    unit(j) = 0.0;
    JacobiAction h = ctx.apply(dir.eta, dir.xi);
    jm.matrix.col(static_cast<Eigen::Index>(j)) = jm.to_coordinates(h.eta, h.xi);
  }
  return jm;
}

}  // namespace dhm
