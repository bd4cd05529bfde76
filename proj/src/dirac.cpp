#include "dhm/dirac.hpp"

#include "dhm/errors.hpp"
#include "dhm/potential.hpp"

namespace dhm {

TangentField map_derivative(const MapField& phi, int axis) {
  const auto& g = *phi.geometry();
  if (axis < 0 || axis >= g.dim()) throw ContractViolation("axis out of range");
  Eigen::VectorXd u = phi.periodic_part();
  TangentField out = TangentField::zero(phi.geometry());
  g.derivatives().apply(as_span(u), as_mut_span(out.values), g.q(), axis);
  if (phi.winding().cwiseAbs().maxCoeff() != 0) {
    Eigen::VectorXd slope = phi.winding_slope().col(axis);
    for (std::size_t s = 0; s < g.sites(); ++s) out.at(s) += slope;
  }
  return out;
}

std::vector<TangentField> differential(const MapField& phi) {
  std::vector<TangentField> d;
  for (int i = 0; i < phi.geometry()->dim(); ++i) d.push_back(project_tangent(map_derivative(phi, i), phi));
  return d;
}

Eigen::VectorXd energy_density(const std::vector<TangentField>& dphi) {
  const auto& g = *dphi.front().geom;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.sites()));
  for (const auto& d : dphi)
    for (std::size_t s = 0; s < g.sites(); ++s) e(s) += d.at(s).squaredNorm();
  return e;
}

double dirichlet_energy(const MapField& phi) {
  return energy_density(differential(phi)).sum() * phi.geometry()->lattice().cell_volume();
}

SpinorField spinor_derivative(const SpinorField& psi, int axis) {
  const auto& g = *psi.geom;
  SpinorField out = SpinorField::zero(psi.geom);
  g.derivatives().apply(as_span(psi.values), as_mut_span(out.values), g.spinor_components(), axis,
                        g.spin().phase(axis));
  return out;
}

SpinorField clifford_multiply(const SpinorField& psi, const Eigen::Matrix2cd& gm) {
  const auto& g = *psi.geom;
  SpinorField out{psi.geom, Eigen::VectorXcd(psi.values.size())};
  for (std::size_t s = 0; s < g.sites(); ++s) out.at(s) = gm * psi.at(s);
  return out;
}

SpinorField clifford_multiply(const SpinorField& psi, int axis) {
  return clifford_multiply(psi, psi.geom->clifford().gamma.at(axis));
}

SpinorField UntwistedDirac::apply(const SpinorField& psi) const {
  const auto& g = *geom_;
  SpinorField out = SpinorField::zero(psi.geom);
  SpinorField d = SpinorField::zero(psi.geom);
  for (int i = 0; i < g.dim(); ++i) {
    g.derivatives().apply(as_span(psi.values), as_mut_span(d.values), g.spinor_components(), i, g.spin().phase(i));
    const Eigen::Matrix2cd& gm = g.clifford().gamma[i];
    for (std::size_t s = 0; s < g.sites(); ++s) out.at(s) += gm * d.at(s);
  }
  return out;
}

Eigen::VectorXcd UntwistedDirac::apply_plain(const Eigen::VectorXcd& u) const {
  const auto& g = *geom_;
  const int ds = g.spinor_dim();
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(u.size());
  Eigen::VectorXcd d(u.size());
  for (int i = 0; i < g.dim(); ++i) {
    g.derivatives().apply(as_span(u), as_mut_span(d), ds, i, g.spin().phase(i));
    const Eigen::Matrix2cd& gm = g.clifford().gamma[i];
    for (std::size_t s = 0; s < g.sites(); ++s) out.segment(s * ds, ds) += gm * d.segment(s * ds, ds);
  }
  return out;
}

namespace {

// Entries sum_i gamma_i[s,r] D_i[x_i, y_i] <t_a(x), t_b(y)> over pairs of
// sites on a common axis line.
Eigen::MatrixXcd assemble_dirac(const Geometry& g, const std::vector<Eigen::MatrixXd>& bases, int tdim) {
  const auto& lat = g.lattice();
  const int ds = g.spinor_dim();
  const std::size_t block = static_cast<std::size_t>(tdim * ds);
  const std::size_t n_total = lat.sites() * block;
  if (n_total > kDenseDiracCap) throw Unsupported("dense Dirac assembly above size cap");
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n_total), static_cast<Eigen::Index>(n_total));
  for (std::size_t x = 0; x < lat.sites(); ++x) {
    auto cx = lat.coords(x);
    for (int i = 0; i < g.dim(); ++i) {
      const Eigen::MatrixXcd& d = g.derivatives().matrix(i, g.spin().phase(i));
      const Eigen::Matrix2cd& gm = g.clifford().gamma[i];
      for (int j = 0; j < lat.points(i); ++j) {
        auto cy = cx;
        cy[i] = j;
        std::size_t y = lat.index(cy);
        cplx dxy = d(cx[i], j);
        if (dxy == cplx(0.0)) continue;
        Eigen::MatrixXd overlap = bases[x].transpose() * bases[y];
        for (int a = 0; a < tdim; ++a)
          for (int b = 0; b < tdim; ++b) {
            double o = overlap(a, b);
            if (o == 0.0) continue;
            for (int s = 0; s < ds; ++s)
              for (int r = 0; r < ds; ++r)
                m(static_cast<Eigen::Index>(x * block + a * ds + s), static_cast<Eigen::Index>(y * block + b * ds + r)) +=
                    gm(s, r) * dxy * o;
          }
      }
    }
  }
  return m;
}

}  // namespace

Eigen::MatrixXcd UntwistedDirac::dense() const {
  std::vector<Eigen::MatrixXd> bases(geom_->sites(), Eigen::MatrixXd::Ones(1, 1));
  return assemble_dirac(*geom_, bases, 1);
}

TwistedDirac::TwistedDirac(const MapField& phi) : phi_(phi) {
  const auto& g = *phi.geometry();
  bases_.reserve(g.sites());
  for (std::size_t s = 0; s < g.sites(); ++s) bases_.push_back(g.target().tangent_basis(phi.at(s)));
}

SpinorField TwistedDirac::apply_unchecked(const SpinorField& psi) const {
  return project_spinor_tangent(UntwistedDirac(psi.geom).apply(psi), phi_);
}

SpinorField TwistedDirac::apply(const SpinorField& psi) const {
  if (spinor_tangency_defect(psi, phi_) > 1e-8) throw ContractViolation("twisted Dirac: spinor is not tangent");
  return apply_unchecked(psi);
}

std::size_t TwistedDirac::coordinate_count() const {
  const auto& g = *phi_.geometry();
  return g.sites() * static_cast<std::size_t>(g.target().dim() * g.spinor_dim());
}

Eigen::VectorXcd TwistedDirac::to_coordinates(const SpinorField& psi) const {
  const auto& g = *phi_.geometry();
  const int tdim = g.target().dim();
  const int ds = g.spinor_dim();
  Eigen::VectorXcd c(static_cast<Eigen::Index>(coordinate_count()));
  for (std::size_t s = 0; s < g.sites(); ++s) {
    Eigen::MatrixXcd cs = psi.at(s) * bases_[s].cast<cplx>();  // ds x tdim
    for (int a = 0; a < tdim; ++a)
      for (int r = 0; r < ds; ++r) c(static_cast<Eigen::Index>((s * tdim + a) * ds + r)) = cs(r, a);
  }
  return c;
}

SpinorField TwistedDirac::from_coordinates(const Eigen::VectorXcd& c) const {
  const auto& g = *phi_.geometry();
  const int tdim = g.target().dim();
  const int ds = g.spinor_dim();
  SpinorField psi = SpinorField::zero(phi_.geometry());
  for (std::size_t s = 0; s < g.sites(); ++s) {
    Eigen::MatrixXcd cs(ds, tdim);
    for (int a = 0; a < tdim; ++a)
      for (int r = 0; r < ds; ++r) cs(r, a) = c(static_cast<Eigen::Index>((s * tdim + a) * ds + r));
    psi.at(s) = cs * bases_[s].transpose().cast<cplx>();
  }
  return psi;
}

OperatorMatrix TwistedDirac::dense() const {
  const auto& g = *phi_.geometry();
  return {assemble_dirac(g, bases_, g.target().dim()), bases_, phi_.geometry()};
}

Eigen::VectorXd dirac_density(const SpinorField& psi, const SpinorField& dpsi) {
  const auto& g = *psi.geom;
  const int c = g.spinor_components();
  Eigen::VectorXd e(static_cast<Eigen::Index>(g.sites()));
  for (std::size_t s = 0; s < g.sites(); ++s)
    e(s) = (psi.values.segment(s * c, c).conjugate().cwiseProduct(dpsi.values.segment(s * c, c))).sum().real();
  return e;
}

double action(const MapField& phi, const SpinorField& psi, const Potential& potential) {
  const auto& g = *phi.geometry();
  const double dirichlet = energy_density(differential(phi)).sum();
  const double dirac = dirac_density(psi, TwistedDirac(phi).apply(psi)).sum();
  const double pot = potential.density(phi, psi).sum();
  return (dirichlet + dirac - 2.0 * pot) * g.lattice().cell_volume();
}

}  // namespace dhm
