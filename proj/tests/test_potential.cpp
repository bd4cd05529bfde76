#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "dhm/errors.hpp"
#include "dhm/potential.hpp"
#include "dhm/sampling.hpp"
#include "dhm/variational.hpp"
#include "oracles.hpp"

using namespace dhm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

GeometryPtr sphere_geom() {
  return Geometry::make(Lattice::cubic(2, 8, kTwoPi), SpinStructure({Phase::Antiperiodic, Phase::Periodic}),
                        Target::sphere(3));
}

std::vector<PotentialSpec> sphere_potentials() {
  Eigen::Matrix3d c;
  c << 1.0, 0.2, -0.3, 0.2, -0.5, 0.1, -0.3, 0.1, 0.7;
  return {
      PotentialSpec::zero(),
      PotentialSpec::curvature_v1(),
      PotentialSpec::superpotential_v2(Eigen::Vector3d(0.3, -0.4, 0.5)),
      PotentialSpec::mass_v3(0.5),
      PotentialSpec::exponential_v4(MapFunction::cosine(0.7, Eigen::Vector3d(1.0, 0.5, -0.2))),
      PotentialSpec::structured(MapFunction::quadratic(0.1, Eigen::Vector3d(0.2, 0.0, -0.1), c),
                                MapFunction::cosine(0.4, Eigen::Vector3d(0.0, 1.0, 1.0)), 6),
      PotentialSpec::map_only(MapFunction::quadratic(0.0, Eigen::Vector3d(0.5, 0.5, 0.0), c)),
  };
}

Eigen::Vector3d retract(const Eigen::Vector3d& y) { return y.normalized(); }

// Largest pointwise norm 1 keeps exp(|psi|^2) of order one.
SpinorField unit_sup(SpinorField psi) {
  double m = 0.0;
  for (std::size_t s = 0; s < psi.geom->sites(); ++s) m = std::max(m, psi.at(s).norm());
  psi.values /= m;
  return psi;
}

// Independent curvature quartic: R_abcd = P_ac P_bd - P_ad P_bc of the unit sphere.
double quartic_oracle(const Eigen::MatrixXcd& psi, const Eigen::MatrixXd& p) {
  const Eigen::Index q = psi.cols();
  Eigen::MatrixXcd h = psi.adjoint() * psi;  // h(a, c) = <psi^a, psi^c>
  cplx acc = 0.0;
  for (Eigen::Index a = 0; a < q; ++a)
    for (Eigen::Index b = 0; b < q; ++b)
      for (Eigen::Index c = 0; c < q; ++c)
        for (Eigen::Index d = 0; d < q; ++d)
          acc += (p(a, c) * p(b, d) - p(a, d) * p(b, c)) * h(a, c) * h(b, d);
  return acc.real();
}

}  // namespace

TEST_CASE("curvature quartic matches the quadruple-sum oracle", "[potential]") {
  auto g = sphere_geom();
  Rng rng(21);
  auto fm = random_rotation_map(g, rng, 1);
  SpinorField psi = random_spinor_field(fm.map, rng, 2);
  Potential v1(PotentialSpec::curvature_v1(), g->target());
  for (std::size_t s = 0; s < g->sites(); s += 7) {
    Eigen::MatrixXd p = g->target().projector(fm.map.at(s));
    double q = quartic_oracle(psi.at(s), p);
    CHECK_THAT(SpinorFactor::curvature_quartic().value(psi.at(s)), WithinAbs(q, 1e-12));
    CHECK_THAT(v1.value_at(fm.map.at(s), psi.at(s)), WithinAbs(q / 12.0, 1e-12));
    CHECK(q >= -1e-12);
  }
  // Vanishes on spinors with a single target direction.
  Eigen::MatrixXcd one = Eigen::MatrixXcd::Zero(2, 3);
  one(0, 1) = cplx(0.3, 0.4);
  one(1, 1) = cplx(-1.0, 0.2);
  CHECK_THAT(SpinorFactor::curvature_quartic().value(one), WithinAbs(0.0, 1e-14));
}

TEST_CASE("spinor factors: gradients and linearizations agree with finite differences", "[potential]") {
  Rng rng(4);
  const double t = 1e-5;
  for (auto f : {SpinorFactor::one(), SpinorFactor::norm_pow(2), SpinorFactor::norm_pow(4), SpinorFactor::norm_pow(6),
                 SpinorFactor::curvature_quartic(), SpinorFactor::exp_norm()}) {
    Eigen::MatrixXcd psi(2, 3), xi(2, 3);
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
      psi(i) = 0.4 * cplx(rng.normal(), rng.normal());
      xi(i) = cplx(rng.normal(), rng.normal());
    }
    double fd = oracle::central_difference([&](double s) { return f.value(psi + s * xi); }, t);
    double an = (f.gradient(psi).adjoint() * xi).trace().real();
    CHECK_THAT(an, WithinAbs(fd, 1e-8 * (1.0 + std::abs(fd))));
    Eigen::MatrixXcd lin_fd = (f.gradient(psi + t * xi) - f.gradient(psi - t * xi)) / (2 * t);
    CHECK((f.linearization(psi, xi) - lin_fd).cwiseAbs().maxCoeff() <= 1e-7 * (1.0 + lin_fd.norm()));
  }
}

TEST_CASE("pointwise potential gradients agree with finite differences", "[potential]") {
  auto g = sphere_geom();
  Rng rng(8);
  auto fm = random_rotation_map(g, rng, 1);
  SpinorField psi = unit_sup(random_frame_spinor(fm, rng, 1));
  TangentField eta = random_tangent_field(fm.map, rng, 1);
  SpinorField xi = random_spinor_field(fm.map, rng, 1);
  const double t = 1e-5;
  for (const auto& spec : sphere_potentials()) {
    Potential v(spec, g->target());
    for (std::size_t s = 0; s < g->sites(); s += 5) {
      Eigen::Vector3d y = fm.map.at(s), e = eta.at(s);
      Eigen::MatrixXcd p = psi.at(s), x = xi.at(s);
      double fd_map = oracle::central_difference([&](double h) { return v.value_at(retract(y + h * e), p); }, t);
      double an_map = v.grad_map_at(y, p).dot(e);
      CHECK_THAT(an_map, WithinAbs(fd_map, 1e-8 * (1.0 + std::abs(fd_map))));
      double fd_sp = oracle::central_difference([&](double h) { return v.value_at(y, p + h * x); }, t);
      double an_sp = (v.grad_spinor_at(y, p).adjoint() * x).trace().real();
      CHECK_THAT(an_sp, WithinAbs(fd_sp, 1e-8 * (1.0 + std::abs(fd_sp))));
    }
  }
}

TEST_CASE("flat torus potentials: V1 vanishes and V2 loses its curvature terms", "[potential]") {
  auto g = Geometry::make(Lattice::cubic(2, 8, kTwoPi), SpinStructure(2), Target::flat_torus(2));
  Potential v1(PotentialSpec::curvature_v1(), g->target());
  CHECK(v1.terms().empty());
  Potential v2(PotentialSpec::superpotential_v2(Eigen::Vector2d(0.3, 0.4)), g->target());
  Eigen::MatrixXcd psi = Eigen::MatrixXcd::Constant(2, 2, cplx(0.5, -0.2));
  CHECK_THAT(v2.value_at(Eigen::Vector2d(1.0, 2.0), psi), WithinAbs(0.5 * 0.25, 1e-15));
  CHECK(v2.grad_spinor_at(Eigen::Vector2d(1.0, 2.0), psi).norm() == 0.0);
}

TEST_CASE("second-order potential pieces agree with finite differences", "[potential]") {
  auto g = sphere_geom();
  Rng rng(12);
  auto fm = random_rotation_map(g, rng, 1);
  const MapField& phi = fm.map;
  SpinorField psi = unit_sup(random_frame_spinor(fm, rng, 1));
  TangentField eta = random_tangent_field(phi, rng, 1);
  SpinorField xi = random_spinor_field(phi, rng, 1);
  const double h = g->lattice().cell_volume();
  for (const auto& spec : sphere_potentials()) {
    Potential v(spec, g->target());
    INFO(to_string(spec.kind));

    // Along the great-circle path the second derivative is the intrinsic Hessian.
    double fd_hess = oracle::five_point_second([&](double t) { return v.integral(varied_map(phi, eta, t), psi); }, 1e-3);
    double an_hess = l2_inner(eta, v.hessian_map(phi, psi, eta));
    CHECK_THAT(an_hess, WithinAbs(fd_hess, 1e-6 * (1.0 + std::abs(fd_hess))));

    auto spinor_path = [&](double t) {
      SpinorField p = psi;
      p.values += t * xi.values;
      return p;
    };
    double fd_xx = oracle::five_point_second([&](double t) { return v.integral(phi, spinor_path(t)); }, 1e-3);
    double an_xx = v.iota_xi_xi(phi, psi, xi).sum() * h;
    CHECK_THAT(an_xx, WithinAbs(fd_xx, 1e-6 * (1.0 + std::abs(fd_xx))));

    const double t = 1e-5;
    Eigen::VectorXd fd_xg =
        (v.grad_map(phi, spinor_path(t)).values - v.grad_map(phi, spinor_path(-t)).values) / (2 * t);
    CHECK((v.iota_xi_grad(phi, psi, xi).values - fd_xg).cwiseAbs().maxCoeff() <= 1e-7 * (1.0 + fd_xg.norm()));

    Eigen::VectorXcd fd_lin =
        (v.grad_spinor(phi, spinor_path(t)).values - v.grad_spinor(phi, spinor_path(-t)).values) / (2 * t);
    CHECK((v.spinor_linearization(phi, psi, xi).values - fd_lin).cwiseAbs().maxCoeff() <=
          1e-7 * (1.0 + fd_lin.norm()));

    // Ambient spinor gradient differentiated along phi + t eta, projected at phi.
    Eigen::VectorXcd fd_mixed = Eigen::VectorXcd::Zero(psi.values.size());
    for (std::size_t s = 0; s < g->sites(); ++s) {
      auto ambient = [&](double tt) {
        Eigen::VectorXd y = phi.at(s) + tt * eta.at(s);
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(2, 3);
        for (const auto& term : v.terms())
          if (term.g.kind() != SpinorFactor::Kind::One) acc += term.coefficient * term.f.value(y) * term.g.gradient(psi.at(s));
        return acc;
      };
      Eigen::MatrixXcd d = (ambient(t) - ambient(-t)) / (2 * t) * g->target().projector(phi.at(s)).cast<cplx>();
      fd_mixed.segment(static_cast<Eigen::Index>(psi.offset(s, 0)), d.size()) =
          Eigen::Map<const Eigen::VectorXcd>(d.data(), d.size());
    }
    CHECK((v.mixed_spinor(phi, psi, eta).values - fd_mixed).cwiseAbs().maxCoeff() <= 1e-7 * (1.0 + fd_mixed.norm()));
  }
}

TEST_CASE("growth slopes of V1 and V3 over three decades", "[potential][growth]") {
  auto g = sphere_geom();
  Rng rng(30);
  auto fm = random_rotation_map(g, rng, 1);
  SpinorField psi = random_frame_spinor(fm, rng, 1);
  std::vector<double> mags;
  for (int i = 0; i <= 12; ++i) mags.push_back(std::pow(10.0, -2.0 + 0.25 * i));

  GrowthReport r1 = growth_report(Potential(PotentialSpec::curvature_v1(), g->target()), fm.map, psi, mags);
  CHECK(r1.conclusive);
  CHECK_THAT(r1.slope_value, WithinAbs(4.0, 0.1));
  CHECK_THAT(r1.slope_spinor_gradient, WithinAbs(3.0, 0.1));
  CHECK(r1.within_bounds);
  CHECK_FALSE(r1.super_polynomial);

  GrowthReport r3 = growth_report(Potential(PotentialSpec::mass_v3(0.5), g->target()), fm.map, psi, mags);
  CHECK_THAT(r3.slope_value, WithinAbs(2.0, 0.1));
  CHECK_THAT(r3.slope_spinor_gradient, WithinAbs(1.0, 0.1));
  CHECK(r3.within_bounds);

  std::vector<double> big;
  for (int i = 0; i <= 12; ++i) big.push_back(std::pow(10.0, -1.0 + 0.25 * i));
  GrowthReport r4 = growth_report(
      Potential(PotentialSpec::exponential_v4(MapFunction::constant(0.0, 3)), g->target()), fm.map, psi, big);
  CHECK(r4.super_polynomial);
  CHECK_FALSE(r4.within_bounds);

  GrowthReport bad = growth_report(Potential(PotentialSpec::mass_v3(0.5), g->target()), fm.map, psi, {1.0, 2.0});
  CHECK_FALSE(bad.conclusive);
}

TEST_CASE("potential specs are validated", "[potential]") {
  const Target s2 = Target::sphere(3);
  CHECK_THROWS_AS(Potential(PotentialSpec::structured(MapFunction::constant(0, 3), MapFunction::constant(1, 3), 3), s2),
                  ConfigurationError);
  CHECK_THROWS_AS(Potential(PotentialSpec::structured(MapFunction::constant(0, 2), MapFunction::constant(1, 3), 2), s2),
                  ConfigurationError);
  CHECK_THROWS_AS(Potential(PotentialSpec::superpotential_v2(Eigen::Vector2d(1, 0)), s2), ConfigurationError);
  CHECK_THROWS_AS(Potential(PotentialSpec::mass_v3(0.0), s2), ConfigurationError);
  CHECK_THROWS_AS(Potential(PotentialSpec::map_only(MapFunction::linear(Eigen::Vector2d(1, 0))), s2),
                  ConfigurationError);
  CHECK_THROWS_AS(potential_kind_from_string("bogus"), ConfigurationError);
  CHECK(potential_kind_from_string(to_string(PotentialKind::MassV3)) == PotentialKind::MassV3);
  CHECK(Potential(PotentialSpec::exponential_v4(MapFunction::constant(0, 3)), s2).growth_exponent() == -1);
  CHECK(Potential(PotentialSpec::curvature_v1(), s2).growth_exponent() == 4);
  CHECK_THROWS_AS(MapFunction::quadratic(0.0, Eigen::Vector3d::Zero(), Eigen::Matrix2d::Zero()), ConfigurationError);
}
