#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <numbers>

#include "dhm/dirac.hpp"
#include "dhm/errors.hpp"
#include "dhm/io.hpp"
#include "dhm/sampling.hpp"
#include "dhm/solvers.hpp"
#include "dhm/variational.hpp"
#include "oracles.hpp"

using namespace dhm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

GeometryPtr sphere(int n, SpinStructure spin) {
  return Geometry::make(Lattice::cubic(2, n, kTwoPi), spin, Target::sphere(3));
}

SpinStructure half_shift() { return SpinStructure({Phase::Antiperiodic, Phase::Periodic}); }

// The k values of the Fourier spectrum closest to zero, twice each for the two tangent slots.
std::vector<double> nearest_zero_oracle(const SpinStructure& spin, int n, std::size_t k) {
  auto all = oracle::dirac_fourier_spectrum(2, n, kTwoPi, {spin.shift(0), spin.shift(1)});
  std::vector<double> doubled;
  for (double l : all) doubled.insert(doubled.end(), 2, l);
  std::stable_sort(doubled.begin(), doubled.end(), [](double a, double b) {
    return std::abs(a) < std::abs(b) - 1e-9 || (std::abs(std::abs(a) - std::abs(b)) <= 1e-9 && a < b);
  });
  doubled.resize(k);
  std::sort(doubled.begin(), doubled.end());
  return doubled;
}

}  // namespace

TEST_CASE("dense spectrum along a constant map reproduces the Fourier modes", "[solvers][spectrum]") {
  auto g = sphere(16, half_shift());
  MapField phi = constant_map(g, Eigen::Vector3d(0, 0, 1));
  SpectrumResult r = dirac_spectrum(phi, 12);
  CHECK(r.method == "dense");
  CHECK(r.converged == 12);
  CHECK_FALSE(r.partial);
  CHECK(oracle::max_abs_diff(r.eigenvalues, nearest_zero_oracle(half_shift(), 16, 12)) <= 1e-10);
  CHECK(r.max_residual <= 1e-10);
  CHECK(r.orthonormality_defect <= 1e-10);
  for (std::size_t j = 0; j < r.eigenspinors.size(); ++j) {
    CHECK(spinor_tangency_defect(r.eigenspinors[j], phi) <= 1e-12);
    CHECK_THAT(l2_norm(r.eigenspinors[j]), WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("Lanczos agrees with the dense eigensolver", "[solvers][spectrum]") {
  auto g = sphere(8, half_shift());
  Rng rng(13);
  auto fm = random_rotation_map(g, rng, 1);
  SpectrumResult dense = dirac_spectrum(fm.map, 6);
  SpectrumResult lanczos = dirac_spectrum_lanczos(fm.map, 6);
  REQUIRE(lanczos.eigenvalues.size() == 6);
  CHECK(oracle::max_abs_diff(dense.eigenvalues, lanczos.eigenvalues) <= 1e-8);
  CHECK(lanczos.max_residual <= 1e-6);
  Eigen::VectorXd all = dirac_eigenvalues(fm.map);
  CHECK(all.size() == 8 * 8 * 2 * 2);
}

TEST_CASE("positivity: truncated minimum is the lowest eigenvalue shifted by the mass", "[solvers][positivity]") {
  for (const SpinStructure& spin : SpinStructure::all(2)) {
    auto g = sphere(8, spin);
    MapField phi = constant_map(g, Eigen::Vector3d(0, 0, 1));
    SpectrumResult spec = dirac_spectrum(phi, 16);
    const double lowest = *std::min_element(spec.eigenvalues.begin(), spec.eigenvalues.end());
    REQUIRE(lowest < 0.0);

    PositivityReport r0 = positivity_report(spec, Potential(PotentialSpec::zero(), g->target()), phi, 16);
    CHECK(r0.closed_form);
    CHECK_THAT(r0.minimum, WithinAbs(lowest, 1e-12));
    CHECK(r0.unbounded_below);

    PositivityReport r3 = positivity_report(spec, Potential(PotentialSpec::mass_v3(0.5), g->target()), phi, 16);
    CHECK_THAT(r3.minimum, WithinAbs(lowest - 0.5, 1e-12));
    CHECK(r3.unbounded_below);
    CHECK(r3.scaling_values.back() < r3.scaling_values.front());
  }
}

TEST_CASE("positivity with an exponential potential matches a brute-force grid", "[solvers][positivity]") {
  auto g = sphere(8, half_shift());
  MapField phi = constant_map(g, Eigen::Vector3d(0, 0, 1));
  SpectrumResult spec = dirac_spectrum(phi, 4);
  Potential v4(PotentialSpec::exponential_v4(MapFunction::constant(1.0, 3)), g->target());
  PositivityReport r = positivity_report(spec, v4, phi, 2);
  CHECK_FALSE(r.closed_form);

  auto functional = [&](const Eigen::VectorXcd& a) {
    SpinorField psi = SpinorField::zero(g);
    for (Eigen::Index j = 0; j < a.size(); ++j) psi.values += a(j) * spec.eigenspinors[static_cast<std::size_t>(j)].values;
    double quad = 0.0;
    for (Eigen::Index j = 0; j < a.size(); ++j) quad += std::norm(a(j)) * spec.eigenvalues[static_cast<std::size_t>(j)];
    return quad - 2.0 * v4.integral(phi, psi);
  };
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 120; ++i)
    for (int j = 0; j < 120; ++j) {
      double th = 0.5 * std::numbers::pi * i / 120, ph = kTwoPi * j / 120;
      Eigen::VectorXcd a(2);
      a << std::cos(th), std::sin(th) * std::polar(1.0, ph);
      best = std::min(best, functional(a));
    }
  CHECK(r.minimum <= best + 1e-9);
  CHECK(r.minimum >= best - 1e-3 * std::abs(best));
  CHECK_THAT(functional(r.minimizer), WithinAbs(r.minimum, 1e-10));
  CHECK_THAT(r.minimizer.norm(), WithinAbs(1.0, 1e-12));
  CHECK_FALSE(r.unbounded_below);
  CHECK(r.exponential_dominates);
  CHECK_THROWS_AS(positivity_report(spec, v4, phi, 5), ContractViolation);
}

TEST_CASE("flow decays a single Fourier mode geometrically", "[solvers][flow]") {
  auto g = Geometry::make(Lattice::cubic(2, 8, kTwoPi), SpinStructure(2), Target::flat_torus(2));
  MapField id = identity_torus_map(g);
  const double eps = 0.05, step = 0.1;
  Eigen::VectorXd vals = id.values();
  for (std::size_t s = 0; s < g->sites(); ++s) vals(2 * s) += eps * std::cos(g->lattice().position(0, g->lattice().coords(s)[0]));
  MapField phi(g, vals, id.winding());
  FlowConfig cfg;
  cfg.step = step;
  cfg.max_iter = 30;
  cfg.tolerance = 1e-30;
  CriticalPointRecord rec = flow_to_critical_point(phi, Potential(PotentialSpec::zero(), g->target()), cfg);
  CHECK_FALSE(rec.converged);
  REQUIRE(rec.trace.size() == 31);
  const double norm_cos = std::numbers::pi * std::sqrt(2.0);
  for (const auto& e : rec.trace)
    CHECK_THAT(e.map_norm, WithinRel(eps * std::pow(1.0 - step, static_cast<double>(e.iteration)) * norm_cos, 1e-10));
  CHECK(rec.residual_decreasing_tail);
}

TEST_CASE("flow reaches a harmonic map on the torus", "[solvers][flow]") {
  auto g = Geometry::make(Lattice::cubic(2, 8, kTwoPi), SpinStructure(2), Target::flat_torus(2));
  Rng rng(6);
  MapField phi = random_torus_map(g, rng, 2, 0.3, Eigen::MatrixXi::Identity(2, 2));
  FlowConfig cfg;
  cfg.max_iter = 20000;
  CriticalPointRecord rec = flow_to_critical_point(phi, Potential(PotentialSpec::zero(), g->target()), cfg);
  CHECK(rec.converged);
  CHECK(rec.map_residual <= 1e-10);
  CHECK(rec.jacobi.computed);
  CHECK(rec.stress.divergence_sup <= 1e-8);
}

TEST_CASE("flow with a fixed eigenmode stays at a constructed solution", "[solvers][flow]") {
  auto g = sphere(8, half_shift());
  FlowConfig cfg;
  cfg.mode = ModeSelector::parse("lowest-positive");
  CriticalPointRecord rec =
      flow_to_critical_point(constant_map(g, Eigen::Vector3d(0, 0, 1)), Potential(PotentialSpec::mass_v3(0.5), g->target()), cfg);
  CHECK(rec.converged);
  CHECK(rec.iterations == 0);
  CHECK(rec.spinor_residual <= 1e-10);
  CHECK(rec.jacobi.computed);
}

TEST_CASE("uncoupled constructions and their failure modes", "[solvers][uncoupled]") {
  auto gp = sphere(8, SpinStructure(2));
  MapField phi = constant_map(gp, Eigen::Vector3d(0, 1, 0));
  Potential zero(PotentialSpec::zero(), gp->target());
  CriticalPointRecord k = make_uncoupled(phi, SpinorRecipe::Kernel, zero);
  CHECK(k.map_residual <= 1e-10);
  CHECK(k.spinor_residual <= 1e-10);
  CHECK_THAT(l2_norm(k.psi), WithinAbs(1.0, 1e-12));

  auto gh = sphere(8, half_shift());
  MapField ph = constant_map(gh, Eigen::Vector3d(0, 1, 0));
  Potential v3(PotentialSpec::mass_v3(0.5), gh->target());
  CriticalPointRecord e = make_uncoupled(ph, SpinorRecipe::Eigenmode, v3, 0.5);
  CHECK(e.spinor_residual <= 1e-10);
  CHECK(make_uncoupled(equator_map(gh), SpinorRecipe::Zero, Potential(PotentialSpec::zero(), gh->target())).converged);

  CHECK_THROWS_AS(make_uncoupled(ph, SpinorRecipe::Kernel, Potential(PotentialSpec::zero(), gh->target())), Unsupported);
  CHECK_THROWS_AS(make_uncoupled(ph, SpinorRecipe::Eigenmode, v3, 0.6), Unsupported);
  CHECK_THROWS_AS(make_uncoupled(ph, SpinorRecipe::Eigenmode, v3, -0.5), NotCritical);
  CHECK_THROWS_AS(make_uncoupled(ph, SpinorRecipe::Kernel, Potential(PotentialSpec::curvature_v1(), gh->target())),
                  Unsupported);
  Rng rng(1);
  CHECK_THROWS_AS(make_uncoupled(random_rotation_map(gh, rng, 1).map, SpinorRecipe::Zero, v3), ContractViolation);
}

TEST_CASE("spinor mode selectors", "[solvers]") {
  for (std::string s : {"zero", "kernel", "lowest-positive", "eigenvalue:0.5"})
    CHECK(ModeSelector::parse(s).str() == s);
  CHECK(ModeSelector::parse("eigenvalue:-1.25").target == -1.25);
  CHECK_THROWS_AS(ModeSelector::parse("eigenvalue:x"), ConfigurationError);
  CHECK_THROWS_AS(ModeSelector::parse("lowest"), ConfigurationError);
  auto g = sphere(8, half_shift());
  MapField phi = constant_map(g, Eigen::Vector3d(1, 0, 0));
  SpinorField lp = select_spinor_mode(phi, ModeSelector::parse("lowest-positive"));
  SpinorField dl = TwistedDirac(phi).apply(lp);
  CHECK((dl.values - 0.5 * lp.values).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(l2_norm(select_spinor_mode(phi, ModeSelector::parse("zero"))) == 0.0);
  CHECK_THROWS_AS(select_spinor_mode(phi, ModeSelector::parse("kernel")), Unsupported);
}

TEST_CASE("flow configuration is validated", "[solvers][flow]") {
  Lattice lat = Lattice::cubic(2, 16, kTwoPi);
  // Spectral Laplacian on 16 points per axis: largest eigenvalue 2 * 7^2.
  CHECK_THAT(FlowConfig::stability_bound(lat), WithinRel(2.0 / 98.0, 1e-12));
  FlowConfig cfg;
  CHECK_NOTHROW(cfg.validate(lat));
  cfg.step = 0.03;
  CHECK_THROWS_AS(cfg.validate(lat), ConfigurationError);
  cfg.step = -1.0;
  CHECK_THROWS_AS(cfg.validate(lat), ConfigurationError);
  cfg = FlowConfig{};
  cfg.damping = 0.0;
  CHECK_THROWS_AS(cfg.validate(lat), ConfigurationError);
  cfg = FlowConfig{};
  cfg.tolerance = 0.0;
  CHECK_THROWS_AS(cfg.validate(lat), ConfigurationError);
  cfg = FlowConfig{};
  cfg.max_iter = 0;
  CHECK_THROWS_AS(cfg.validate(lat), ConfigurationError);
}

TEST_CASE("critical-point records round-trip through JSON", "[solvers][io]") {
  auto g = sphere(8, half_shift());
  CriticalPointRecord rec = make_uncoupled(constant_map(g, Eigen::Vector3d(0, 0, 1)), SpinorRecipe::Eigenmode,
                                           Potential(PotentialSpec::mass_v3(0.5), g->target()), 0.5);
  rec.config_hash = "0123456789abcdef";
  rec.seed = 42;
  auto path = std::filesystem::temp_directory_path() / "dhm_record_roundtrip.json";
  save_record(path.string(), rec);
  CriticalPointRecord back = load_record(path.string());
  std::filesystem::remove(path);
  CHECK(to_json(back).dump() == to_json(rec).dump());
  CHECK((back.psi.values - rec.psi.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.potential.kind == PotentialKind::MassV3);
  CHECK(back.potential.lambda == 0.5);
  CHECK_THROWS_AS(record_from_json(nlohmann::json::parse(R"({"format": "other"})")), ConfigurationError);
}
