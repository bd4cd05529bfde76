// Command-line front end: dhm <subcommand> --config FILE [--out DIR] [--seed N]
// [--tolerance X] [--max-iter N]

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dhm/config.hpp"
#include "dhm/diagnostics.hpp"
#include "dhm/dirac.hpp"
#include "dhm/errors.hpp"
#include "dhm/io.hpp"
#include "dhm/potential.hpp"
#include "dhm/solvers.hpp"
#include "dhm/variational.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace dhm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitNonConvergence = 3;

struct Output {
  std::vector<json> records;
  std::ostringstream summary;
  std::map<std::string, std::string> files;
  int exit_code = kExitOk;
};

struct Context {
  std::string subcommand;
  RunConfig cfg;
  MapField phi;
  SpinorField psi;
};

json header(const Context& c) {
  return {{"type", "header"},           {"schema", "dhm-records"},      {"version", 1},
          {"subcommand", c.subcommand}, {"config_hash", c.cfg.hash},     {"seed", c.cfg.seed},
          {"potential", to_json(c.cfg.potential)}};
}

std::string num(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

json residual_json(const ELResidual& r, const char* formulation) {
  return {{"type", "residual"}, {"formulation", formulation}, {"map", r.map_norm}, {"spinor", r.spinor_norm}};
}

void run_residual(const Context& c, const Potential& v, Output& out) {
  ELResidual r = el_residual(c.phi, c.psi, v);
  out.records.push_back(residual_json(r, "intrinsic"));
  out.summary << "intrinsic residual: map " << num(r.map_norm) << ", spinor " << num(r.spinor_norm) << "\n";
  if (c.phi.geometry()->target().kind() == TargetKind::Sphere) {
    ExtrinsicResidual e = el_residual_extrinsic(c.phi, c.psi, v);
    json j = residual_json(e.residual, "extrinsic");
    j["antisymmetry_defect"] = e.antisymmetry_defect;
    j["omega_bound_ratio"] = e.omega_bound_ratio;
    j["a_bound_ratio"] = e.a_bound_ratio;
    j["bounds_hold"] = e.bounds_hold;
    TangentField dm = r.map_residual;
    dm.values -= e.residual.map_residual.values;
    SpinorField ds = r.spinor_residual;
    ds.values -= e.residual.spinor_residual.values;
    j["agreement"] = std::max(l2_norm(dm), l2_norm(ds));
    out.records.push_back(j);
    out.summary << "extrinsic residual: map " << num(e.residual.map_norm) << ", spinor "
                << num(e.residual.spinor_norm) << ", formulations agree to " << num(j["agreement"].get<double>())
                << "\n";
  }
}

void run_stress(const Context& c, const Potential& v, Output& out, bool per_site) {
  StressEnergy se = stress_energy(c.phi, c.psi, v);
  Eigen::VectorXd tr = se.trace();
  Eigen::VectorXd formula = stress_trace_formula(c.phi, c.psi, v);
  Eigen::MatrixXd div = divergence_stress_energy(se);
  if (per_site) {
    const auto& lat = c.phi.geometry()->lattice();
    for (std::size_t s = 0; s < lat.sites(); ++s) {
      auto x = lat.coords(s);
      std::vector<int> coords(x.begin(), x.begin() + lat.dim());
      std::vector<double> d(static_cast<std::size_t>(div.cols()));
      for (Eigen::Index i = 0; i < div.cols(); ++i) d[static_cast<std::size_t>(i)] = div(static_cast<Eigen::Index>(s), i);
      out.records.push_back({{"type", "stress_site"},
                             {"site", s},
                             {"coords", coords},
                             {"trace", tr(static_cast<Eigen::Index>(s))},
                             {"trace_formula", formula(static_cast<Eigen::Index>(s))},
                             {"divergence", d}});
    }
  }
  StressSummary sum = summarize_stress(c.phi, c.psi, v);
  out.records.push_back({{"type", "stress_summary"},
                         {"symmetry_defect", sum.symmetry_defect},
                         {"max_abs_trace", sum.max_abs_trace},
                         {"trace_identity_defect", sum.trace_identity_defect},
                         {"divergence_sup", sum.divergence_sup}});
  out.summary << "stress-energy: symmetry defect " << num(sum.symmetry_defect) << ", trace identity defect "
              << num(sum.trace_identity_defect) << ", sup |div S| " << num(sum.divergence_sup) << "\n";
}

SpectrumResult run_spectrum(const Context& c, Output& out, bool per_mode) {
  SpectrumResult sp = dirac_spectrum(c.phi, c.cfg.spectrum_count);
  if (per_mode)
    for (std::size_t j = 0; j < sp.eigenvalues.size(); ++j)
      out.records.push_back(
          {{"type", "eigenvalue"}, {"index", j}, {"value", sp.eigenvalues[j]}, {"residual", sp.residuals[j]}});
  out.records.push_back({{"type", "spectrum_summary"},
                         {"method", sp.method},
                         {"requested", sp.requested},
                         {"converged", sp.converged},
                         {"partial", sp.partial},
                         {"max_residual", sp.max_residual},
                         {"orthonormality_defect", sp.orthonormality_defect}});
  out.summary << "Dirac spectrum (" << sp.method << ", " << sp.converged << "/" << sp.requested << " converged):";
  for (double l : sp.eigenvalues) out.summary << ' ' << num(l);
  out.summary << "\n";
  if (sp.partial) {
    out.summary << "spectrum only partially converged\n";
    out.exit_code = kExitNonConvergence;
  }
  return sp;
}

void run_positivity(const Context& c, const Potential& v, const SpectrumResult& sp, Output& out) {
  std::size_t cutoff = c.cfg.positivity_cutoff ? c.cfg.positivity_cutoff : sp.eigenspinors.size();
  PositivityReport pr = positivity_report(sp, v, c.phi, cutoff, c.cfg.seed);
  std::vector<double> re, im;
  for (Eigen::Index j = 0; j < pr.minimizer.size(); ++j) {
    re.push_back(pr.minimizer(j).real());
    im.push_back(pr.minimizer(j).imag());
  }
  out.records.push_back({{"type", "positivity"},
                         {"cutoff", pr.cutoff},
                         {"minimum", pr.minimum},
                         {"closed_form", pr.closed_form},
                         {"minimizer_re", re},
                         {"minimizer_im", im},
                         {"scaling_t", pr.scaling_t},
                         {"scaling_values", pr.scaling_values},
                         {"unbounded_below", pr.unbounded_below},
                         {"exponential_dominates", pr.exponential_dominates},
                         {"note", pr.note}});
  out.summary << "positivity (cutoff " << pr.cutoff << "): minimum " << num(pr.minimum) << "; " << pr.note << "\n";
}

void run_morrey(const Context& c, const Potential& v, Output& out) {
  const auto& lat = c.phi.geometry()->lattice();
  const double lambda = c.cfg.morrey_lambda > 0.0 ? c.cfg.morrey_lambda : lat.dim();
  for (const auto& [name, mag] : {std::pair<std::string, Eigen::VectorXd>{"dphi", differential_magnitude(c.phi)},
                                  std::pair<std::string, Eigen::VectorXd>{"psi", spinor_magnitude(c.psi)}}) {
    MorreyNorm mn = morrey_norm(lat, mag, c.cfg.morrey_p, lambda);
    out.records.push_back({{"type", "morrey"},
                           {"field", name},
                           {"p", mn.p},
                           {"lambda", mn.lambda},
                           {"value", mn.value},
                           {"center", mn.center},
                           {"radius", mn.radius}});
    out.summary << "Morrey M^{" << num(mn.p) << "," << num(mn.lambda) << "} of |" << name << "|: " << num(mn.value)
                << " (centre " << mn.center << ", radius " << num(mn.radius) << ")\n";
  }
  const int s = v.spec().kind == PotentialKind::Structured ? v.spec().s : 0;
  SmallnessReport sr = smallness_check(c.phi, c.psi, c.cfg.epsilon, s);
  for (const auto& row : sr.rows) {
    json j = {{"type", "smallness"},
              {"radius", row.radius},
              {"dphi_m22", row.map_norm},
              {"psi_m42", row.spinor_norm},
              {"sum", row.sum}};
    if (s > 4) j["psi_m2_2s_minus_2"] = row.spinor_high;
    out.records.push_back(j);
  }
  out.records.push_back({{"type", "smallness_summary"},
                         {"epsilon", sr.epsilon},
                         {"satisfied_full", sr.satisfied_full},
                         {"largest_radius", sr.largest_radius}});
  out.summary << "smallness (epsilon " << num(sr.epsilon) << "): "
              << (sr.satisfied_full ? std::string("holds on the full lattice")
                  : sr.largest_radius > 0.0 ? "holds on balls of radius " + num(sr.largest_radius)
                                            : std::string("fails at every listed radius"))
              << "\n";
  CouplingEnergy ce = coupling_energy(c.phi, c.psi);
  out.records.push_back({{"type", "coupling_energy"}, {"integral", ce.integral}});
  out.summary << "coupling energy: " << num(ce.integral) << "\n";
  SurrogateNorms sn = surrogate_norms(c.phi, c.psi, s);
  out.records.push_back({{"type", "surrogate_norms"},
                         {"t", sn.t},
                         {"map_w12", sn.map_w12},
                         {"spinor_w1_4_3", sn.spinor_w1_43},
                         {"spinor_lt", sn.spinor_lt}});
  out.summary << "surrogate norms: W^{1,2}(phi) " << num(sn.map_w12) << ", W^{1,4/3}(psi) " << num(sn.spinor_w1_43)
              << ", L^" << sn.t << "(psi) " << num(sn.spinor_lt) << "\n";
}

void run_hessian(const Context& c, const Potential& v, Output& out) {
  const double tol = std::max(c.cfg.flow.tolerance, 1e-8);
  JacobiMatrix jm = jacobi_matrix(c.phi, c.psi, v, tol);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (jm.matrix + jm.matrix.transpose()), Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = es.eigenvalues();
  std::size_t negative = 0, null = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    out.records.push_back({{"type", "jacobi_eigenvalue"}, {"index", i}, {"value", ev(i)}});
    if (ev(i) < -1e-8) ++negative;
    if (std::abs(ev(i)) <= 1e-8) ++null;
  }
  out.records.push_back({{"type", "jacobi_summary"},
                         {"dimension", ev.size()},
                         {"map_block", jm.map_block},
                         {"spinor_block", jm.spinor_block},
                         {"symmetry_defect", jm.symmetry_defect()},
                         {"negative", negative},
                         {"null", null}});
  out.summary << "Jacobi operator: dimension " << ev.size() << ", symmetry defect " << num(jm.symmetry_defect())
              << ", " << negative << " negative and " << null << " null directions, lowest "
              << (ev.size() ? num(ev(0)) : std::string("-")) << "\n";
}

void run_growth(const Context& c, const Potential& v, Output& out) {
  std::vector<double> mags;
  for (int k = -2; k <= 6; ++k) mags.push_back(std::pow(10.0, 0.5 * k));
  GrowthReport g = growth_report(v, c.phi, c.psi, mags);
  out.records.push_back({{"type", "growth"},
                         {"slope_value", g.slope_value},
                         {"slope_map_gradient", g.slope_map_gradient},
                         {"slope_spinor_gradient", g.slope_spinor_gradient},
                         {"declared_exponent", g.declared_exponent},
                         {"conclusive", g.conclusive},
                         {"super_polynomial", g.super_polynomial},
                         {"within_bounds", g.within_bounds},
                         {"note", g.note}});
  out.summary << "growth: slopes |V| " << num(g.slope_value) << ", |V_psi| " << num(g.slope_spinor_gradient)
              << (g.super_polynomial ? ", super-polynomial" : "") << (g.conclusive ? "" : " (inconclusive)") << "\n";
}

void run_flow(const Context& c, const Potential& v, Output& out) {
  std::optional<SpinorField> psi0;
  if (c.cfg.spinor_kind != "zero" || !c.cfg.record_file.empty()) psi0 = c.psi;
  auto emit_trace = [&](const std::vector<TraceEntry>& tr) {
    for (const auto& t : tr)
      out.records.push_back({{"type", "iteration"},
                             {"iteration", t.iteration},
                             {"map", t.map_norm},
                             {"spinor", t.spinor_norm},
                             {"action", t.action}});
  };
  try {
    CriticalPointRecord rec = flow_to_critical_point(c.phi, v, c.cfg.flow, psi0);
    rec.config_hash = c.cfg.hash;
    emit_trace(rec.trace);
    out.records.push_back({{"type", "flow_result"},
                           {"converged", rec.converged},
                           {"iterations", rec.iterations},
                           {"map", rec.map_residual},
                           {"spinor", rec.spinor_residual},
                           {"action", rec.action},
                           {"residual_decreasing_tail", rec.residual_decreasing_tail}});
    out.files["critical_point.json"] = to_json(rec).dump(1) + "\n";
    out.files["map.field"] = map_field_to_string(rec.phi);
    out.files["spinor.field"] = spinor_field_to_string(rec.psi);
    out.summary << "flow: " << (rec.converged ? "converged" : "stopped") << " after " << rec.iterations
                << " iterations, residual map " << num(rec.map_residual) << ", spinor " << num(rec.spinor_residual)
                << "\n";
    if (!rec.converged) out.exit_code = kExitNonConvergence;
  } catch (const FlowDiverged& e) {
    emit_trace(e.trace());
    out.records.push_back({{"type", "flow_result"}, {"converged", false}, {"error", e.what()}});
    out.summary << "flow aborted: " << e.what() << "\n";
    out.exit_code = kExitNonConvergence;
  }
}

void run_report(const Context& c, const Potential& v, Output& out) {
  run_residual(c, v, out);
  run_stress(c, v, out, false);
  SpectrumResult sp = run_spectrum(c, out, false);
  run_positivity(c, v, sp, out);
  run_morrey(c, v, out);
  if (l2_norm(c.psi) > 0.0) run_growth(c, v, out);
  ELResidual r = el_residual(c.phi, c.psi, v);
  const double tol = std::max(c.cfg.flow.tolerance, 1e-8);
  if (r.map_norm <= tol && r.spinor_norm <= tol) {
    JacobiSummary js = summarize_jacobi(c.phi, c.psi, v, tol);
    out.records.push_back({{"type", "jacobi_summary"},
                           {"computed", js.computed},
                           {"dimension", js.dimension},
                           {"lowest", js.lowest},
                           {"symmetry_defect", js.symmetry_defect},
                           {"note", js.note}});
    if (js.computed) out.summary << "Jacobi: lowest eigenvalue " << num(js.lowest.front()) << "\n";
  }
}

void write_outputs(const fs::path& dir, const Context& c, const Output& out) {
  fs::create_directories(dir);
  {
    std::ofstream os(dir / (c.subcommand + ".jsonl"));
    os << header(c).dump() << '\n';
    for (const auto& r : out.records) os << r.dump() << '\n';
  }
  {
    std::ofstream os(dir / (c.subcommand + ".txt"));
    os << out.summary.str();
  }
  for (const auto& [name, body] : out.files) {
    std::ofstream os(dir / name);
    os << body;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dirac-harmonic maps with potential: lattice solver and diagnostics"};
  app.require_subcommand(1, 1);
  std::string config, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> tolerance;
  std::optional<std::size_t> max_iter;
  const std::vector<std::string> names{"spectrum", "flow",     "residual", "hessian",
                                       "stress",   "morrey",   "positivity", "report"};
  for (const auto& n : names) {
    CLI::App* sub = app.add_subcommand(n);
    sub->add_option("--config", config, "run configuration file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides [output] dir)");
    sub->add_option("--seed", seed, "random seed (overrides [run] seed)");
    sub->add_option("--tolerance", tolerance, "residual tolerance (overrides [solver] tolerance)");
    sub->add_option("--max-iter", max_iter, "flow iteration cap (overrides [solver] max_iter)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInvalid;
  }

  Context c;
  c.subcommand = app.get_subcommands().front()->get_name();
  Output out;
  try {
    c.cfg = load_config(config);
    if (seed) c.cfg.seed = c.cfg.flow.seed = *seed;
    if (tolerance) {
      if (!(*tolerance > 0.0)) throw ConfigurationError("--tolerance must be positive");
      c.cfg.flow.tolerance = *tolerance;
    }
    if (max_iter) {
      if (*max_iter == 0) throw ConfigurationError("--max-iter must be positive");
      c.cfg.flow.max_iter = *max_iter;
    }
    if (!out_dir.empty()) c.cfg.output_dir = out_dir;
    FieldPair f = build_fields(c.cfg);
    c.phi = f.phi;
    c.psi = f.psi;
    Potential v(c.cfg.potential, c.phi.geometry()->target());

    if (c.subcommand == "spectrum") {
      run_spectrum(c, out, true);
    } else if (c.subcommand == "flow") {
      run_flow(c, v, out);
    } else if (c.subcommand == "residual") {
      run_residual(c, v, out);
    } else if (c.subcommand == "hessian") {
      run_hessian(c, v, out);
    } else if (c.subcommand == "stress") {
      run_stress(c, v, out, true);
    } else if (c.subcommand == "morrey") {
      run_morrey(c, v, out);
    } else if (c.subcommand == "positivity") {
      SpectrumResult sp = run_spectrum(c, out, true);
      run_positivity(c, v, sp, out);
    } else {
      run_report(c, v, out);
    }
  } catch (const NotCritical& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const NonConvergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  try {
    write_outputs(c.cfg.output_dir, c, out);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  std::cout << out.summary.str();
  return out.exit_code;
}
