#include "dhm/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "dhm/dirac.hpp"
#include "dhm/sampling.hpp"
#include "dhm/variational.hpp"

namespace dhm {

namespace {

struct DenseEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXcd vectors;  // Euclidean-orthonormal tangent coordinates
};

DenseEigen dense_eigen(const TwistedDirac& d) {
  if (d.coordinate_count() > kDenseDiracCap) throw Unsupported("dense Dirac spectrum above size cap");
  OperatorMatrix om = d.dense();
  Eigen::MatrixXcd h = 0.5 * (om.matrix + om.matrix.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  return {es.eigenvalues(), es.eigenvectors()};
}

// Indices of the k eigenvalues nearest zero, returned in ascending eigenvalue
// order. ev is ascending; magnitudes equal to 1e-9 count as ties and the
// negative value is taken first.
std::vector<std::size_t> nearest_zero(const Eigen::VectorXd& ev, std::size_t k) {
  const auto n = static_cast<std::ptrdiff_t>(ev.size());
  const double tol = 1e-9 * (1.0 + (n ? ev.cwiseAbs().maxCoeff() : 0.0));
  std::ptrdiff_t hi = 0;
  while (hi < n && ev(hi) < 0.0) ++hi;
  std::ptrdiff_t lo = hi - 1;
  std::vector<std::size_t> idx;
  while (idx.size() < k && (lo >= 0 || hi < n)) {
    bool take_low = hi >= n || (lo >= 0 && std::abs(ev(lo)) <= std::abs(ev(hi)) + tol);
    idx.push_back(static_cast<std::size_t>(take_low ? lo-- : hi++));
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

cplx hermitian(const SpinorField& a, const SpinorField& b) {
  return lattice_hermitian(a.geom->lattice(), as_span(a.values), as_span(b.values));
}

void check_spectrum(const TwistedDirac& d, SpectrumResult& r, double tol) {
  r.max_residual = 0.0;
  r.orthonormality_defect = 0.0;
  r.converged = 0;
  r.residuals.clear();
  for (std::size_t j = 0; j < r.eigenspinors.size(); ++j) {
    SpinorField res = d.apply_unchecked(r.eigenspinors[j]);
    res.values -= r.eigenvalues[j] * r.eigenspinors[j].values;
    double e = l2_norm(res);
    r.residuals.push_back(e);
    r.max_residual = std::max(r.max_residual, e);
    if (e <= tol) ++r.converged;
    for (std::size_t i = 0; i <= j; ++i) {
      cplx g = hermitian(r.eigenspinors[i], r.eigenspinors[j]);
      if (i == j) g -= 1.0;
      r.orthonormality_defect = std::max(r.orthonormality_defect, std::abs(g));
    }
  }
  r.partial = r.converged < r.requested;
}

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

SpectrumResult dirac_spectrum(const MapField& phi, std::size_t k) {
  TwistedDirac d(phi);
  if (d.coordinate_count() > kDenseDiracCap) return dirac_spectrum_lanczos(phi, k);
  DenseEigen de = dense_eigen(d);
  const double w = 1.0 / std::sqrt(phi.geometry()->lattice().cell_volume());
  SpectrumResult r;
  r.method = "dense";
  r.requested = std::min<std::size_t>(k, static_cast<std::size_t>(de.values.size()));
  for (std::size_t j : nearest_zero(de.values, k)) {
    r.eigenvalues.push_back(de.values(static_cast<Eigen::Index>(j)));
    r.eigenspinors.push_back(d.from_coordinates(w * de.vectors.col(static_cast<Eigen::Index>(j))));
  }
  check_spectrum(d, r, 1e-8);
  return r;
}

Eigen::VectorXd dirac_eigenvalues(const MapField& phi) { return dense_eigen(TwistedDirac(phi)).values; }

SpectrumResult dirac_spectrum_lanczos(const MapField& phi, std::size_t k, const LanczosOptions& opt) {
  TwistedDirac d(phi);
  const auto n = static_cast<Eigen::Index>(d.coordinate_count());
  auto op = [&](const Eigen::VectorXcd& c) { return d.to_coordinates(d.apply_unchecked(d.from_coordinates(c))); };
  auto op2 = [&](const Eigen::VectorXcd& c) { return op(op(c)); };

  Rng rng(0x5eed);
  Eigen::VectorXcd v0(n);
  for (Eigen::Index i = 0; i < n; ++i) v0(i) = cplx(rng.normal(), rng.normal());

  // Upper bound for the spectrum of D^2 by power iteration.
  Eigen::VectorXcd p = v0.normalized();
  double top = 0.0;
  for (int it = 0; it < 30; ++it) {
    Eigen::VectorXcd q = op2(p);
    top = q.norm();
    if (top == 0.0) break;
    p = q / top;
  }
  const double sigma = 1.1 * top + 1.0;

  const auto mk = static_cast<Eigen::Index>(std::min<std::size_t>(opt.max_krylov, static_cast<std::size_t>(n)));
  Eigen::MatrixXcd qb(n, mk);
  Eigen::VectorXd alpha(mk), beta(mk);
  qb.col(0) = v0.normalized();
  Eigen::Index used = 0;
  for (Eigen::Index j = 0; j < mk; ++j) {
    Eigen::VectorXcd wv = sigma * qb.col(j) - op2(qb.col(j));
    alpha(j) = qb.col(j).dot(wv).real();
    // Full reorthogonalization, twice.
    for (int pass = 0; pass < 2; ++pass) wv -= qb.leftCols(j + 1) * (qb.leftCols(j + 1).adjoint() * wv);
    used = j + 1;
    if (j + 1 == mk) break;
    beta(j) = wv.norm();
    if (beta(j) < 1e-13) break;
    qb.col(j + 1) = wv / beta(j);
  }
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(used, used);
  for (Eigen::Index j = 0; j < used; ++j) {
    t(j, j) = alpha(j);
    if (j + 1 < used) t(j, j + 1) = t(j + 1, j) = beta(j);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ts(t);
  // Largest Ritz values of sigma - D^2 are the smallest of D^2; keep a margin for +- pairs.
  const Eigen::Index keep = std::min<Eigen::Index>(used, static_cast<Eigen::Index>(2 * k + 4));
  Eigen::MatrixXcd y = qb.leftCols(used) * ts.eigenvectors().rightCols(keep).cast<cplx>();
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(y);
  Eigen::MatrixXcd basis = qr.householderQ() * Eigen::MatrixXcd::Identity(n, keep);
  Eigen::MatrixXcd db(n, keep);
  for (Eigen::Index j = 0; j < keep; ++j) db.col(j) = op(basis.col(j));
  Eigen::MatrixXcd small = basis.adjoint() * db;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> rs(0.5 * (small + small.adjoint()));

  const double w = 1.0 / std::sqrt(phi.geometry()->lattice().cell_volume());
  SpectrumResult r;
  r.method = "lanczos";
  r.requested = std::min<std::size_t>(k, static_cast<std::size_t>(n));
  for (std::size_t j : nearest_zero(rs.eigenvalues(), k)) {
    r.eigenvalues.push_back(rs.eigenvalues()(static_cast<Eigen::Index>(j)));
    Eigen::VectorXcd c = basis * rs.eigenvectors().col(static_cast<Eigen::Index>(j));
    r.eigenspinors.push_back(d.from_coordinates(w * c));
  }
  check_spectrum(d, r, opt.tolerance);
  return r;
}

// ---------------------------------------------------------------------------

namespace {

SpinorField combine(const SpectrumResult& spec, const Eigen::VectorXcd& a) {
  SpinorField psi = SpinorField::zero(spec.eigenspinors.front().geom);
  for (Eigen::Index j = 0; j < a.size(); ++j) psi.values += a(j) * spec.eigenspinors[static_cast<std::size_t>(j)].values;
  return psi;
}

bool quadratic_in_spinor(const Potential& v) {
  for (const auto& t : v.terms()) {
    if (t.g.kind() == SpinorFactor::Kind::One) continue;
    if (t.g.kind() == SpinorFactor::Kind::NormPow && t.g.power() == 2) continue;
    return false;
  }
  return true;
}

struct Truncated {
  const SpectrumResult& spec;
  const Potential& v;
  const MapField& phi;
  std::size_t n;

  double value(const Eigen::VectorXcd& a) const {
    double q = 0.0;
    for (std::size_t j = 0; j < n; ++j) q += std::norm(a(static_cast<Eigen::Index>(j))) * spec.eigenvalues[j];
    return q - 2.0 * v.integral(phi, combine(spec, a));
  }

  Eigen::VectorXcd gradient(const Eigen::VectorXcd& a) const {
    SpinorField vp = v.grad_spinor(phi, combine(spec, a));
    Eigen::VectorXcd g(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j)
      g(static_cast<Eigen::Index>(j)) =
          2.0 * spec.eigenvalues[j] * a(static_cast<Eigen::Index>(j)) - 2.0 * hermitian(spec.eigenspinors[j], vp);
    return g;
  }

  // Projected gradient descent on the unit sphere with backtracking.
  Eigen::VectorXcd descend(Eigen::VectorXcd a, double& fa) const {
    fa = value(a);
    double step = 0.1;
    for (int it = 0; it < 500; ++it) {
      Eigen::VectorXcd g = gradient(a);
      Eigen::VectorXcd gt = g - a.dot(g).real() * a;
      double gn = gt.squaredNorm();
      if (gn < 1e-24) break;
      bool moved = false;
      while (step > 1e-14) {
        Eigen::VectorXcd b = (a - step * gt).normalized();
        double fb = value(b);
        if (std::isfinite(fb) && fb <= fa - 1e-4 * step * gn) {
          a = b;
          fa = fb;
          moved = true;
          step *= 2.0;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    return a;
  }
};

}  // namespace

PositivityReport positivity_report(const SpectrumResult& spec, const Potential& v, const MapField& phi,
                                   std::size_t cutoff, std::uint64_t seed) {
  if (cutoff == 0 || cutoff > spec.eigenspinors.size())
    throw ContractViolation("basis cutoff must be between 1 and the number of computed eigenpairs");
  PositivityReport rep;
  rep.cutoff = cutoff;
  const auto n = static_cast<Eigen::Index>(cutoff);
  const double vol = phi.geometry()->lattice().cell_volume();
  Truncated tr{spec, v, phi, cutoff};

  double constant = 0.0;
  if (quadratic_in_spinor(v)) {
    rep.closed_form = true;
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) m(j, j) = spec.eigenvalues[static_cast<std::size_t>(j)];
    const auto& g = *phi.geometry();
    for (const auto& t : v.terms()) {
      Eigen::VectorXd f(static_cast<Eigen::Index>(g.sites()));
      for (std::size_t s = 0; s < g.sites(); ++s) f(static_cast<Eigen::Index>(s)) = t.coefficient * t.f.value(phi.at(s));
      if (t.g.kind() == SpinorFactor::Kind::One) {
        constant += f.sum() * vol;
        continue;
      }
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
          cplx acc = 0.0;
          const auto& a = spec.eigenspinors[static_cast<std::size_t>(i)];
          const auto& b = spec.eigenspinors[static_cast<std::size_t>(j)];
          for (std::size_t s = 0; s < g.sites(); ++s)
            acc += f(static_cast<Eigen::Index>(s)) * (a.at(s).conjugate().cwiseProduct(b.at(s))).sum();
          m(i, j) -= 2.0 * acc * vol;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()));
    const double quad = es.eigenvalues()(0);
    rep.minimum = quad - 2.0 * constant;
    rep.minimizer = es.eigenvectors().col(0);
    rep.unbounded_below = quad < -1e-12;
    rep.note = rep.unbounded_below ? "negative quadratic form on the truncated space: unbounded below"
                                   : "quadratic form nonnegative on the truncated space";
    for (double t = 1.0; t <= 1024.0; t *= 2.0) {
      rep.scaling_t.push_back(t);
      rep.scaling_values.push_back(t * t * quad - 2.0 * constant);
    }
    return rep;
  }

  // General potentials: grid (cutoff 2) or seeded restarts, then descent.
  std::vector<Eigen::VectorXcd> starts;
  if (cutoff == 1) {
    starts.push_back(Eigen::VectorXcd::Ones(1));
  } else if (cutoff == 2) {
    const int nt = 33, np = 32;
    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXcd arg(2);
    for (int i = 0; i < nt; ++i)
      for (int j = 0; j < np; ++j) {
        double th = 0.5 * std::numbers::pi * i / (nt - 1);
        double ph = 2.0 * std::numbers::pi * j / np;
        Eigen::VectorXcd a(2);
        a << std::cos(th), std::sin(th) * cplx(std::cos(ph), std::sin(ph));
        double f = tr.value(a);
        if (f < best) {
          best = f;
          arg = a;
        }
      }
    starts.push_back(arg);
  } else {
    for (Eigen::Index j = 0; j < n; ++j) starts.push_back(Eigen::VectorXcd::Unit(n, j));
    Rng rng(seed);
    for (int r = 0; r < 16; ++r) {
      Eigen::VectorXcd a(n);
      for (Eigen::Index j = 0; j < n; ++j) a(j) = cplx(rng.normal(), rng.normal());
      starts.push_back(a.normalized());
    }
  }
  rep.minimum = std::numeric_limits<double>::infinity();
  for (const auto& s : starts) {
    double f = 0.0;
    Eigen::VectorXcd a = tr.descend(s, f);
    if (f < rep.minimum) {
      rep.minimum = f;
      rep.minimizer = a;
    }
  }
  for (double t = 1.0; t <= 1024.0; t *= 2.0) {
    double f = tr.value(t * rep.minimizer);
    if (std::isnan(f)) f = std::numeric_limits<double>::infinity();
    rep.scaling_t.push_back(t);
    rep.scaling_values.push_back(f);
  }
  const auto& sv = rep.scaling_values;
  const std::size_t ns = sv.size();
  rep.unbounded_below = std::isfinite(sv[ns - 1]) && sv[ns - 1] < sv[ns - 2] && sv[ns - 2] < sv[ns - 3] && sv[ns - 1] < 0.0;
  rep.exponential_dominates = v.growth_exponent() < 0 && (!std::isfinite(sv[ns - 1]) || sv[ns - 1] > sv[ns - 2]);
  std::ostringstream os;
  os << (rep.unbounded_below ? "functional decreases without bound along the minimizing direction"
                             : "functional bounded below along the minimizing direction");
  if (rep.exponential_dominates) os << "; exponential term dominates at large amplitude";
  rep.note = os.str();
  return rep;
}

// ---------------------------------------------------------------------------

ModeSelector ModeSelector::parse(const std::string& s) {
  ModeSelector m;
  if (s == "zero") {
    m.kind = Kind::Zero;
  } else if (s == "kernel") {
    m.kind = Kind::Kernel;
  } else if (s == "lowest-positive") {
    m.kind = Kind::LowestPositive;
  } else if (s.rfind("eigenvalue:", 0) == 0) {
    m.kind = Kind::Eigenvalue;
    try {
      std::size_t used = 0;
      m.target = std::stod(s.substr(11), &used);
      if (used != s.size() - 11) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw ConfigurationError("bad eigenvalue in spinor mode '" + s + "'");
    }
  } else {
    throw ConfigurationError("unknown spinor mode '" + s + "' (zero, kernel, lowest-positive, eigenvalue:<x>)");
  }
  return m;
}

std::string ModeSelector::str() const {
  switch (kind) {
    case Kind::Zero: return "zero";
    case Kind::Kernel: return "kernel";
    case Kind::LowestPositive: return "lowest-positive";
    case Kind::Eigenvalue: {
      std::ostringstream os;
      os.precision(17);
      os << "eigenvalue:" << target;
      return os.str();
    }
  }
  return "zero";
}

double FlowConfig::stability_bound(const Lattice& lat) {
  Derivatives d(lat);
  double top = 0.0;
  for (int i = 0; i < lat.dim(); ++i) {
    const Eigen::MatrixXd& m = d.real_matrix(i);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.transpose() * m, Eigen::EigenvaluesOnly);
    top += es.eigenvalues().maxCoeff();
  }
  return 2.0 / top;
}

void FlowConfig::validate(const Lattice& lat) const {
  if (!(step >= 0.0) || !std::isfinite(step)) throw ConfigurationError("flow step must be a nonnegative number");
  if (step > stability_bound(lat))
    throw ConfigurationError("flow step exceeds the explicit stability bound " + std::to_string(stability_bound(lat)));
  if (max_iter == 0) throw ConfigurationError("flow needs at least one iteration");
  if (!(tolerance > 0.0)) throw ConfigurationError("flow tolerance must be positive");
  if (!(damping > 0.0 && damping <= 1.0)) throw ConfigurationError("damping must lie in (0, 1]");
}

StressSummary summarize_stress(const MapField& phi, const SpinorField& psi, const Potential& v) {
  StressEnergy se = stress_energy(phi, psi, v);
  StressSummary s;
  s.symmetry_defect = se.symmetry_defect();
  Eigen::VectorXd tr = se.trace();
  s.max_abs_trace = max_abs(tr);
  s.trace_identity_defect = max_abs(tr - stress_trace_formula(phi, psi, v));
  Eigen::MatrixXd div = divergence_stress_energy(se);
  s.divergence_sup = div.size() ? div.cwiseAbs().maxCoeff() : 0.0;
  return s;
}

namespace {

std::size_t jacobi_dimension(const Geometry& g) {
  const auto td = static_cast<std::size_t>(g.target().dim());
  return g.sites() * td * (1 + 2 * static_cast<std::size_t>(g.spinor_dim()));
}

JacobiSummary summarize_jacobi_capped(const MapField& phi, const SpinorField& psi, const Potential& v, double tol,
                                      std::size_t count, std::size_t cap) {
  JacobiSummary js;
  js.dimension = jacobi_dimension(*phi.geometry());
  if (js.dimension > cap) {
    js.note = "dimension " + std::to_string(js.dimension) + " above the dense cap " + std::to_string(cap);
    return js;
  }
  JacobiMatrix jm = jacobi_matrix(phi, psi, v, tol);
  js.symmetry_defect = jm.symmetry_defect();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (jm.matrix + jm.matrix.transpose()), Eigen::EigenvaluesOnly);
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(es.eigenvalues().size(), static_cast<Eigen::Index>(count)); ++i)
    js.lowest.push_back(es.eigenvalues()(i));
  js.computed = true;
  return js;
}

}  // namespace

JacobiSummary summarize_jacobi(const MapField& phi, const SpinorField& psi, const Potential& v, double tol,
                               std::size_t count) {
  return summarize_jacobi_capped(phi, psi, v, tol, count, kDenseJacobiCap);
}

// ---------------------------------------------------------------------------

namespace {

}  // namespace

SpinorField select_spinor_mode(const MapField& phi, const ModeSelector& sel) {
  if (sel.kind == ModeSelector::Kind::Zero) return SpinorField::zero(phi.geometry());
  TwistedDirac d(phi);
  DenseEigen de = dense_eigen(d);
  Eigen::Index pick = -1;
  for (Eigen::Index j = 0; j < de.values.size(); ++j) {
    double l = de.values(j);
    switch (sel.kind) {
      case ModeSelector::Kind::Kernel:
        if (std::abs(l) <= 1e-8 && pick < 0) pick = j;
        break;
      case ModeSelector::Kind::LowestPositive:
        if (l > 1e-8 && (pick < 0 || l < de.values(pick) - 1e-12)) pick = j;
        break;
      case ModeSelector::Kind::Eigenvalue:
        if (pick < 0 || std::abs(l - sel.target) < std::abs(de.values(pick) - sel.target) - 1e-12) pick = j;
        break;
      case ModeSelector::Kind::Zero: break;
    }
  }
  if (pick < 0) throw Unsupported("no eigenmode matches spinor selector '" + sel.str() + "'");
  const double w = 1.0 / std::sqrt(phi.geometry()->lattice().cell_volume());
  return d.from_coordinates(w * de.vectors.col(pick));
}

namespace {

// Damped fixed point psi <- (1 - theta) psi + theta D^+ V_psi(phi, psi) in tangent coordinates.
SpinorField fixed_point_spinor(const MapField& phi, SpinorField psi, const Potential& v, const FlowConfig& cfg,
                               double tol) {
  TwistedDirac d(phi);
  DenseEigen de = dense_eigen(d);
  const Eigen::Index n = de.values.size();
  Eigen::VectorXd inv(n);
  for (Eigen::Index j = 0; j < n; ++j) inv(j) = std::abs(de.values(j)) > 1e-10 ? 1.0 / de.values(j) : 0.0;
  for (std::size_t it = 0; it < cfg.fixed_point_iter; ++it) {
    Eigen::VectorXcd rhs = d.to_coordinates(v.grad_spinor(phi, psi));
    Eigen::VectorXcd sol = de.vectors * inv.cast<cplx>().cwiseProduct(de.vectors.adjoint() * rhs);
    SpinorField next = d.from_coordinates(sol);
    psi.values = (1.0 - cfg.damping) * psi.values + cfg.damping * next.values;
    SpinorField res = d.apply_unchecked(psi);
    res.values -= v.grad_spinor(phi, psi).values;
    if (l2_norm(res) <= tol) break;
  }
  return psi;
}

void align_phase(SpinorField& psi, const SpinorField& ref) {
  cplx ov = hermitian(ref, psi);
  if (std::abs(ov) > 1e-14) psi.values *= std::conj(ov) / std::abs(ov);
}

void finalize_record(CriticalPointRecord& rec, const Potential& v, std::size_t jacobi_cap) {
  ELResidual r = el_residual(rec.phi, rec.psi, v);
  rec.map_residual = r.map_norm;
  rec.spinor_residual = r.spinor_norm;
  rec.action = action(rec.phi, rec.psi, v);
  rec.stress = summarize_stress(rec.phi, rec.psi, v);
  if (rec.converged) {
    rec.jacobi = summarize_jacobi_capped(rec.phi, rec.psi, v, std::max(rec.tolerance, 1e-8), 10, jacobi_cap);
  } else {
    rec.jacobi.dimension = jacobi_dimension(*rec.phi.geometry());
    rec.jacobi.note = "not a critical point";
  }
}

}  // namespace

CriticalPointRecord flow_to_critical_point(const MapField& phi0, const Potential& v, const FlowConfig& cfg,
                                           std::optional<SpinorField> psi0) {
  const Lattice& lat = phi0.geometry()->lattice();
  cfg.validate(lat);
  const double step = cfg.step > 0.0 ? cfg.step : 0.5 * FlowConfig::stability_bound(lat);
  const bool linear = quadratic_in_spinor(v);

  CriticalPointRecord rec;
  rec.seed = cfg.seed;
  rec.potential = v.spec();
  rec.tolerance = cfg.tolerance;
  rec.phi = phi0;
  rec.psi = psi0 ? project_spinor_tangent(*psi0, phi0) : select_spinor_mode(phi0, cfg.mode);
  const bool zero_spinor = cfg.mode.kind == ModeSelector::Kind::Zero && !psi0;
  const double norm0 = l2_norm(rec.psi);
  if (!linear && !zero_spinor) rec.psi = fixed_point_spinor(rec.phi, rec.psi, v, cfg, cfg.tolerance);

  std::vector<double> totals;
  for (std::size_t it = 0;; ++it) {
    ELResidual r = el_residual(rec.phi, rec.psi, v);
    rec.trace.push_back({it, r.map_norm, r.spinor_norm, action(rec.phi, rec.psi, v)});
    totals.push_back(r.map_norm + r.spinor_norm);
    rec.iterations = it;
    if (r.map_norm <= cfg.tolerance && r.spinor_norm <= cfg.tolerance) {
      rec.converged = true;
      break;
    }
    if (!std::isfinite(totals.back()) || (it >= 100 && totals[it] > 10.0 * totals[it - 100])) {
      std::ostringstream os;
      os << "flow diverged at iteration " << it << ": residual " << totals.back();
      throw FlowDiverged(os.str(), rec.trace);
    }
    if (it == cfg.max_iter) break;

    Eigen::VectorXd raw = rec.phi.values() + step * r.map_residual.values;
    rec.phi = project_to_target(rec.phi.geometry(), raw, rec.phi.winding());
    if (zero_spinor) {
      rec.psi = SpinorField::zero(rec.phi.geometry());
    } else if (cfg.spinor == SpinorHandling::Resolve && !psi0) {
      SpinorField fresh = select_spinor_mode(rec.phi, cfg.mode);
      align_phase(fresh, rec.psi);
      rec.psi = fresh;
    } else {
      rec.psi = project_spinor_tangent(rec.psi, rec.phi);
      double nn = l2_norm(rec.psi);
      if (linear && nn > 0.0) rec.psi.values *= norm0 / nn;
    }
    if (!linear && !zero_spinor) rec.psi = fixed_point_spinor(rec.phi, rec.psi, v, cfg, cfg.tolerance);
  }
  const std::size_t total = totals.size();
  const std::size_t tail = std::max<std::size_t>(1, total / 10);
  rec.residual_decreasing_tail = total < 2 || totals[total - 1] <= totals[total - 1 - std::min(tail, total - 1)];
  finalize_record(rec, v, kRecordJacobiCap);
  return rec;
}

CriticalPointRecord make_uncoupled(const MapField& phi, SpinorRecipe recipe, const Potential& v, double eigenvalue) {
  const double tau = max_abs(tension(phi).values);
  if (tau > 1e-10) throw ContractViolation("map is not harmonic: tension " + std::to_string(tau));
  if (v.spec().kind == PotentialKind::CurvatureV1 && recipe != SpinorRecipe::Zero)
    throw Unsupported("curvature-coupled potential admits only the zero-spinor construction");
  CriticalPointRecord rec;
  rec.potential = v.spec();
  rec.tolerance = 1e-8;
  rec.phi = phi;
  switch (recipe) {
    case SpinorRecipe::Zero: rec.psi = SpinorField::zero(phi.geometry()); break;
    case SpinorRecipe::Kernel:
      try {
        rec.psi = select_spinor_mode(phi, ModeSelector{ModeSelector::Kind::Kernel, 0.0});
      } catch (const Unsupported&) {
        throw Unsupported("construction unavailable: no harmonic spinors for this spin structure");
      }
      break;
    case SpinorRecipe::Eigenmode: {
      rec.psi = select_spinor_mode(phi, ModeSelector{ModeSelector::Kind::Eigenvalue, eigenvalue});
      SpinorField res = TwistedDirac(phi).apply_unchecked(rec.psi);
      res.values -= eigenvalue * rec.psi.values;
      if (l2_norm(res) > 1e-8)
        throw Unsupported("construction unavailable: " + std::to_string(eigenvalue) + " is not an eigenvalue");
      break;
    }
  }
  ELResidual r = el_residual(rec.phi, rec.psi, v);
  if (r.map_norm > 1e-8 || r.spinor_norm > 1e-8)
    throw NotCritical("uncoupled pair does not solve the system for this potential", r.map_norm, r.spinor_norm);
  rec.converged = true;
  finalize_record(rec, v, kRecordJacobiCap);
  return rec;
}

}  // namespace dhm
