// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <sstream>
#include <string>

#include "dhm/diagnostics.hpp"
#include "dhm/dirac.hpp"
#include "dhm/errors.hpp"
#include "dhm/sampling.hpp"
#include "dhm/solvers.hpp"
#include "dhm/variational.hpp"
#include "oracles.hpp"

using namespace dhm;
namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::vector<double> eigenvalues(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

std::vector<double> shifts_of(const SpinStructure& s) {
  std::vector<double> out;
  for (int i = 0; i < s.dim(); ++i) out.push_back(s.shift(i));
  return out;
}

SpinorField unit_sup(SpinorField psi) {
  double m = 0.0;
  for (std::size_t s = 0; s < psi.geom->sites(); ++s) m = std::max(m, psi.at(s).norm());
  psi.values /= m;
  return psi;
}

GeometryPtr sphere(int n, const SpinStructure& spin) {
  return Geometry::make(Lattice::cubic(2, n, kTwoPi), spin, Target::sphere(3));
}

const SpinStructure kHalf({Phase::Antiperiodic, Phase::Periodic});

void criterion1(Outcome& o) {
  double clifford = 0.0, skew = 0.0;
  for (int m : {2, 3}) {
    CliffordRep cl = make_clifford(m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        Eigen::Matrix2cd ac = cl.gamma[i] * cl.gamma[j] + cl.gamma[j] * cl.gamma[i];
        if (i == j) ac += 2.0 * Eigen::Matrix2cd::Identity();
        clifford = std::max(clifford, ac.cwiseAbs().maxCoeff());
      }
  }
  for (Phase ph : {Phase::Periodic, Phase::Antiperiodic}) {
    Eigen::MatrixXcd d = axis_derivative_matrix(16, kTwoPi, ph, Stencil::Spectral);
    skew = std::max(skew, (d + d.adjoint()).cwiseAbs().maxCoeff());
  }
  double herm = 0.0, pairing = 0.0;
  for (const SpinStructure& spin : SpinStructure::all(2)) {
    Eigen::MatrixXcd dm = UntwistedDirac(sphere(16, spin)).dense();
    herm = std::max(herm, (dm - dm.adjoint()).cwiseAbs().maxCoeff());
    auto ev = eigenvalues(dm);
    for (std::size_t i = 0; i < ev.size(); ++i) pairing = std::max(pairing, std::abs(ev[i] + ev[ev.size() - 1 - i]));
  }
  o.detail << "clifford " << clifford << ", skew " << skew << ", hermitian " << herm << ", pairing " << pairing;
  o.require(clifford <= 1e-12 && skew <= 1e-12, "entrywise 1e-12");
  o.require(herm <= 1e-10, "hermitian 1e-10");
  o.require(pairing <= 1e-8, "pairing 1e-8");
}

void criterion2(Outcome& o) {
  double worst = 0.0;
  bool kernels = true;
  for (const SpinStructure& spin : SpinStructure::all(2)) {
    auto ev = eigenvalues(UntwistedDirac(sphere(16, spin)).dense());
    worst = std::max(worst, oracle::max_abs_diff(ev, oracle::dirac_fourier_spectrum(2, 16, kTwoPi, shifts_of(spin))));
    std::size_t kernel = 0;
    for (double l : ev) kernel += std::abs(l) < 1e-8;
    const bool periodic = spin.shift(0) == 0.0 && spin.shift(1) == 0.0;
    kernels = kernels && kernel == (periodic ? 2u : 0u);
    o.detail << "delta (" << spin.shift(0) << "," << spin.shift(1) << ") kernel " << kernel << "; ";
  }
  o.detail << "max deviation " << worst;
  o.require(worst <= 1e-10, "eigenvalues 1e-10");
  o.require(kernels, "kernel dimensions");
}

void criterion3(Outcome& o) {
  double worst = 0.0;
  int pairs = 0;
  for (bool on_sphere : {true, false}) {
    auto g = Geometry::make(Lattice::cubic(2, 12, kTwoPi), kHalf, on_sphere ? Target::sphere(3) : Target::flat_torus(2));
    const int q = g->q();
    Rng rng(on_sphere ? 301 : 302);
    std::vector<PotentialSpec> specs{
        PotentialSpec::zero(), PotentialSpec::curvature_v1(),
        PotentialSpec::superpotential_v2(Eigen::VectorXd::LinSpaced(q, 0.3, -0.2)), PotentialSpec::mass_v3(0.5),
        PotentialSpec::exponential_v4(MapFunction::cosine(0.7, Eigen::VectorXd::LinSpaced(q, 1.0, 0.5)))};
    for (const auto& spec : specs) {
      Potential v(spec, g->target());
      for (int trial = 0; trial < 20; ++trial) {
        MapField phi;
        SpinorField psi;
        if (on_sphere) {
          auto fm = random_rotation_map(g, rng, 1);
          phi = fm.map;
          psi = unit_sup(random_frame_spinor(fm, rng, 1));
        } else {
          phi = random_torus_map(g, rng, 2, 0.5, Eigen::MatrixXi::Identity(2, 2));
          psi = unit_sup(random_spinor_field(phi, rng, 2));
        }
        TangentField eta = random_tangent_field(phi, rng, 2);
        eta.values /= l2_norm(eta);
        SpinorField xi = random_spinor_field(phi, rng, 2);
        xi.values /= l2_norm(xi);
        FirstVariation fv = first_variation_check(phi, psi, v, eta, xi, 1e-4);
        worst = std::max(worst, rel(fv.analytic, fv.numeric));
        ++pairs;
      }
    }
  }
  o.detail << pairs << " field pairs, worst relative error " << worst;
  o.require(worst <= 1e-6, "relative 1e-6");
}

void criterion4(Outcome& o) {
  auto gh = sphere(12, kHalf);
  auto gp = sphere(12, SpinStructure(2));
  struct Case {
    const char* name;
    CriticalPointRecord rec;
  };
  Potential v3(PotentialSpec::mass_v3(0.5), gh->target());
  Potential zero(PotentialSpec::zero(), gp->target());
  std::vector<std::pair<const char*, CriticalPointRecord>> cases;
  cases.emplace_back("V3 eigenspinor", make_uncoupled(constant_map(gh, Eigen::Vector3d(0, 0, 1)), SpinorRecipe::Eigenmode, v3, 0.5));
  cases.emplace_back("kernel spinor", make_uncoupled(constant_map(gp, Eigen::Vector3d(0, 0, 1)), SpinorRecipe::Kernel, zero));
  for (const auto& [name, rec] : cases) {
    const Potential& v = rec.potential.kind == PotentialKind::MassV3 ? v3 : zero;
    ELResidual in = el_residual(rec.phi, rec.psi, v);
    ExtrinsicResidual ex = el_residual_extrinsic(rec.phi, rec.psi, v);
    double agree = std::max((in.map_residual.values - ex.residual.map_residual.values).cwiseAbs().maxCoeff(),
                            (in.spinor_residual.values - ex.residual.spinor_residual.values).cwiseAbs().maxCoeff());
    double worst = std::max({in.map_norm, in.spinor_norm, ex.residual.map_norm, ex.residual.spinor_norm});
    o.detail << name << ": residual " << worst << ", agreement " << agree << "; ";
    o.require(worst <= 1e-10, std::string(name) + " residual 1e-10");
    o.require(agree <= 1e-8, std::string(name) + " agreement 1e-8");
  }
}

void criterion5(Outcome& o) {
  double trace = 0.0;
  for (int m : {2, 3}) {
    auto g = Geometry::make(Lattice::cubic(m, m == 2 ? 12 : 6, kTwoPi), SpinStructure(m), Target::sphere(3));
    Rng rng(500 + m);
    for (const auto& spec : {PotentialSpec::zero(), PotentialSpec::curvature_v1(), PotentialSpec::mass_v3(0.5),
                             PotentialSpec::superpotential_v2(Eigen::Vector3d(0.3, -0.4, 0.5))}) {
      Potential v(spec, g->target());
      for (int trial = 0; trial < 3; ++trial) {
        auto fm = random_rotation_map(g, rng, 1);
        SpinorField psi = random_frame_spinor(fm, rng, 1);
        Eigen::VectorXd ref = (2.0 - m) * energy_density(differential(fm.map)) +
                              (1.0 - m) * dirac_density(psi, TwistedDirac(fm.map).apply(psi)) +
                              2.0 * m * v.density(fm.map, psi);
        trace = std::max(trace, (stress_energy(fm.map, psi, v).trace() - ref).cwiseAbs().maxCoeff());
      }
    }
  }
  auto gh = sphere(16, kHalf);
  Potential v3(PotentialSpec::mass_v3(0.5), gh->target());
  MapField phi = constant_map(gh, Eigen::Vector3d(0, 0, 1));
  PlaneWave w = plane_wave_spinor(gh->lattice(), gh->spin(), gh->clifford(), {0, 0, 0}, 1);
  SpinorField psi = tensor_spinor(gh, w.values, Eigen::Vector3d(1, 0, 0));
  double div_v3 = divergence_stress_energy(stress_energy(phi, psi, v3)).cwiseAbs().maxCoeff();
  Potential zero(PotentialSpec::zero(), gh->target());
  MapField eq = equator_map(gh);
  double div_eq = divergence_stress_energy(stress_energy(eq, SpinorField::zero(gh), zero)).cwiseAbs().maxCoeff();

  Rng rng(77);
  TangentField eta = random_tangent_field(eq, rng, 2);
  std::vector<double> res, div;
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}) {
    MapField p = varied_map(eq, eta, eps);
    res.push_back(el_residual(p, SpinorField::zero(gh), zero).map_norm);
    div.push_back(divergence_stress_energy(stress_energy(p, SpinorField::zero(gh), zero)).cwiseAbs().maxCoeff());
  }
  const double slope = oracle::loglog_slope(res, div);
  o.detail << "trace identity " << trace << ", divergence at solutions " << std::max(div_v3, div_eq)
           << ", residual decades " << std::log10(res.front() / res.back()) << ", slope " << slope;
  o.require(trace <= 1e-10, "trace 1e-10");
  o.require(std::max(div_v3, div_eq) <= 1e-8, "divergence 1e-8");
  o.require(std::log10(res.front() / res.back()) >= 3.0 - 1e-9, "three decades");
  o.require(std::abs(slope - 1.0) <= 0.1, "slope 1 +- 0.1");
}

void criterion6(Outcome& o) {
  auto gh = sphere(8, kHalf);
  Potential v3(PotentialSpec::mass_v3(0.5), gh->target());
  CriticalPointRecord rec = make_uncoupled(constant_map(gh, Eigen::Vector3d(0, 0, 1)), SpinorRecipe::Eigenmode, v3, 0.5);
  auto g16 = sphere(16, SpinStructure(2));
  Potential zero(PotentialSpec::zero(), g16->target());
  MapField eq = equator_map(g16);

  Rng rng(600);
  double fd_worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    for (int c = 0; c < 2; ++c) {
      const MapField& phi = c == 0 ? rec.phi : eq;
      SpinorField psi = c == 0 ? rec.psi : SpinorField::zero(g16);
      const Potential& v = c == 0 ? v3 : zero;
      TangentField eta = random_tangent_field(phi, rng, 2);
      SpinorField xi = random_spinor_field(phi, rng, 2);
      double q = second_variation(phi, psi, v, eta, xi);
      double fd = oracle::five_point_second([&](double t) { return action_along_path(phi, psi, v, eta, xi, t); }, 1e-3);
      fd_worst = std::max(fd_worst, rel(q, fd));
    }
  }
  JacobiMatrix j = jacobi_matrix(rec.phi, rec.psi, v3);
  const double sym = j.symmetry_defect() / j.matrix.cwiseAbs().maxCoeff();
  double form_worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    TangentField eta = random_tangent_field(rec.phi, rng, 2);
    SpinorField xi = random_spinor_field(rec.phi, rng, 2);
    Eigen::VectorXd c = j.to_coordinates(eta, xi);
    form_worst = std::max(form_worst, rel(c.dot(j.matrix * c), second_variation_form(rec.phi, rec.psi, v3, eta, xi)));
  }
  double oracle_worst = 0.0;
  for (const SpinStructure& spin : SpinStructure::all(2)) {
    auto g = sphere(8, spin);
    Potential z(PotentialSpec::zero(), g->target());
    JacobiMatrix jc = jacobi_matrix(constant_map(g, Eigen::Vector3d(0, 0, 1)), SpinorField::zero(g), z);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jc.matrix, Eigen::EigenvaluesOnly);
    std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    oracle_worst = std::max(oracle_worst, oracle::max_abs_diff(ev, oracle::jacobi_constant_map_spectrum(2, 8, kTwoPi, shifts_of(spin), 2)));
  }
  o.detail << "five-point " << fd_worst << ", symmetry " << sym << ", form " << form_worst << ", block oracle "
           << oracle_worst;
  o.require(fd_worst <= 1e-4, "five-point 1e-4");
  o.require(sym <= 1e-8, "symmetry 1e-8");
  o.require(form_worst <= 1e-8, "form 1e-8");
  o.require(oracle_worst <= 1e-8, "block oracle 1e-8");
}

void criterion7(Outcome& o) {
  for (const SpinStructure& spin : SpinStructure::all(2)) {
    auto g = sphere(8, spin);
    MapField phi = constant_map(g, Eigen::Vector3d(0, 0, 1));
    SpectrumResult spec = dirac_spectrum(phi, 16);
    const double lowest = *std::min_element(spec.eigenvalues.begin(), spec.eigenvalues.end());
    PositivityReport r0 = positivity_report(spec, Potential(PotentialSpec::zero(), g->target()), phi, 16);
    PositivityReport r3 = positivity_report(spec, Potential(PotentialSpec::mass_v3(0.5), g->target()), phi, 16);
    const double d0 = std::abs(r0.minimum - lowest), d3 = std::abs(r3.minimum - (lowest - 0.5));
    o.detail << "delta (" << spin.shift(0) << "," << spin.shift(1) << ") min " << r0.minimum << " / " << r3.minimum
             << "; ";
    o.require(d0 <= 1e-12 && d3 <= 1e-12, "minimum reproduces the spectrum");
    o.require(lowest < 0.0 && r0.minimum < 0.0 && r3.minimum < 0.0 && r0.unbounded_below && r3.unbounded_below,
              "negative minimum");
  }
}

void criterion8(Outcome& o) {
  auto g = sphere(8, kHalf);
  Rng rng(800);
  auto fm = random_rotation_map(g, rng, 1);
  SpinorField psi = random_frame_spinor(fm, rng, 1);
  std::vector<double> mags;
  for (int i = 0; i <= 12; ++i) mags.push_back(std::pow(10.0, -2.0 + 0.25 * i));
  GrowthReport r1 = growth_report(Potential(PotentialSpec::curvature_v1(), g->target()), fm.map, psi, mags);
  GrowthReport r3 = growth_report(Potential(PotentialSpec::mass_v3(0.5), g->target()), fm.map, psi, mags);
  GrowthReport r4 = growth_report(Potential(PotentialSpec::exponential_v4(MapFunction::constant(0.0, 3)), g->target()),
                                  fm.map, psi, mags);
  o.detail << "V1 (" << r1.slope_value << ", " << r1.slope_spinor_gradient << "), V3 (" << r3.slope_value << ", "
           << r3.slope_spinor_gradient << "), V4 super-polynomial " << (r4.super_polynomial ? "yes" : "no");
  o.require(std::abs(r1.slope_value - 4.0) <= 0.1 && std::abs(r1.slope_spinor_gradient - 3.0) <= 0.1, "V1 slopes");
  o.require(std::abs(r3.slope_value - 2.0) <= 0.1 && std::abs(r3.slope_spinor_gradient - 1.0) <= 0.1, "V3 slopes");
  o.require(r4.super_polynomial, "V4 flag");
}

void criterion9(Outcome& o) {
  std::vector<Lattice> lats{Lattice::cubic(2, 16, kTwoPi), Lattice(2, {8, 12, 1}, {kTwoPi, 3.0, 1.0}),
                            Lattice::cubic(3, 6, 1.0)};
  Rng rng(900);
  double lp = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Lattice& lat = lats[static_cast<std::size_t>(trial) % lats.size()];
    Eigen::VectorXd f(static_cast<Eigen::Index>(lat.sites()));
    for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = std::abs(rng.normal());
    const double p = trial % 2 ? 4.0 : 2.0;
    std::vector<double> fv(f.data(), f.data() + f.size());
    lp = std::max(lp, rel(morrey_norm(lat, f, p, lat.dim()).value, oracle::lp_norm(fv, lat.cell_volume(), p)));
  }
  double spike = 0.0;
  for (int n : {8, 16, 32}) {
    for (double lambda : {0.5, 1.0, 1.5}) {
      Lattice lat = Lattice::cubic(2, n, 2.0);
      Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lat.sites()));
      f(3) = 2.5;
      spike = std::max(spike, rel(morrey_norm(lat, f, 2.0, lambda).value, 2.5 * std::pow(lat.spacing(0), lambda / 2.0)));
    }
  }
  o.detail << "L^p agreement " << lp << " over 50 fields, spike law " << spike;
  o.require(lp <= 1e-12, "L^p 1e-12");
  o.require(spike <= 1e-10, "spike 1e-10");
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void criterion10(Outcome& o) {
  const fs::path work = fs::temp_directory_path() / "dhm_acceptance_determinism";
  fs::remove_all(work);
  int compared = 0;
  for (std::string sub : {"spectrum", "flow", "residual", "hessian", "stress", "morrey", "positivity", "report"}) {
    int rc[2];
    for (int run = 0; run < 2; ++run) {
      fs::path out = work / std::to_string(run) / sub;
      std::string cmd = std::string("\"") + DHM_CLI + "\" " + sub + " --config \"" + DHM_TEST_DATA +
                        "/v3_sphere.cfg\" --out \"" + out.string() + "\" > /dev/null 2>&1";
      rc[run] = std::system(cmd.c_str());
    }
    o.require(rc[0] == 0 && rc[1] == 0, sub + " exit status");
    for (const auto& e : fs::directory_iterator(work / "0" / sub)) {
      fs::path other = work / "1" / sub / e.path().filename();
      o.require(fs::exists(other) && slurp(e.path()) == slurp(other), sub + "/" + e.path().filename().string());
      ++compared;
    }
  }
  fs::remove_all(work);
  o.detail << compared << " output files compared byte for byte";
  o.require(compared >= 16, "every subcommand wrote records");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"operator substrate", criterion1},  {"spectral oracle", criterion2},   {"first variation", criterion3},
      {"constructed solutions", criterion4}, {"stress-energy", criterion5},   {"second variation", criterion6},
      {"positivity obstruction", criterion7}, {"growth exponents", criterion8}, {"Morrey norms", criterion9},
      {"determinism", criterion10}};
  const double budget[] = {1.0, 10.0, 60.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget[i] > 0.0 && secs > budget[i]) {
      o.pass = false;
      o.detail << " [over the " << budget[i] << " s budget]";
    }
    failed += !o.pass;
    std::printf("criterion %2zu %s: %s (%.2f s): %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(), secs,
                o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
