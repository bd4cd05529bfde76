#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <numbers>

#include "dhm/config.hpp"
#include "dhm/dirac.hpp"
#include "dhm/errors.hpp"
#include "dhm/io.hpp"

using namespace dhm;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

const char* kFull = R"(# comment line
[lattice]
dim = 2
points = 8 12
length = 2pi
stencil = spectral

[spin]
shifts = 0.5 0

[target]
kind = sphere
ambient_dim = 3

[potential]
kind = v3
lambda = 0.5

[fields]
map = equator
spinor = eigen
spinor_eigenvalue = 0.5

[solver]
max_iter = 50
tolerance = 1e-9
mode = lowest-positive
spectrum_count = 6
positivity_cutoff = 4

[diagnostics]
epsilon = 0.2

[output]
dir = results

[run]
seed = 7
)";

const char* kMinimal = "[lattice]\ndim = 2\npoints = 8\n[target]\nkind = sphere\n";

std::string message_of(const std::string& text) {
  try {
    parse_config(text, "test.cfg");
  } catch (const ConfigurationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("a full configuration parses into every field", "[config]") {
  RunConfig c = parse_config(kFull, "full.cfg");
  CHECK(c.dim == 2);
  CHECK(c.points[0] == 8);
  CHECK(c.points[1] == 12);
  CHECK_THAT(c.lengths[1], WithinAbs(2.0 * std::numbers::pi, 1e-15));
  CHECK(c.shifts == std::vector<double>{0.5, 0.0});
  CHECK(c.target == TargetKind::Sphere);
  CHECK(c.potential.kind == PotentialKind::MassV3);
  CHECK(c.potential.lambda == 0.5);
  CHECK(c.map_kind == "equator");
  CHECK(c.spinor_kind == "eigen");
  CHECK(c.flow.max_iter == 50);
  CHECK(c.flow.tolerance == 1e-9);
  CHECK(c.flow.mode.kind == ModeSelector::Kind::LowestPositive);
  CHECK(c.spectrum_count == 6);
  CHECK(c.positivity_cutoff == 4);
  CHECK(c.epsilon == 0.2);
  CHECK(c.output_dir == "results");
  CHECK(c.seed == 7);
  CHECK(c.hash.size() == 16);
}

TEST_CASE("defaults of a minimal configuration", "[config]") {
  RunConfig c = parse_config(kMinimal);
  CHECK(c.points[1] == 8);
  CHECK_THAT(c.lengths[0], WithinAbs(2.0 * std::numbers::pi, 1e-15));
  CHECK(c.shifts == std::vector<double>{0.0, 0.0});
  CHECK(c.potential.kind == PotentialKind::Zero);
  CHECK(c.map_point.size() == 3);
  CHECK(c.map_point(2) == 1.0);
  CHECK(c.flow.step == 0.0);
  CHECK(c.output_dir == "out");
}

TEST_CASE("configuration errors name the offending key or line", "[config]") {
  CHECK_THAT(message_of("[lattice]\ndim = 2\n[target]\nkind = sphere\n"), ContainsSubstring("lattice.points"));
  CHECK_THAT(message_of(std::string(kMinimal) + "[lattice2]\nx = 1\n"), ContainsSubstring("[lattice2]"));
  CHECK_THAT(message_of(std::string(kMinimal) + "[solver]\nfoo = 1\n"), ContainsSubstring("solver.foo"));
  CHECK_THAT(message_of("[lattice\ndim = 2\n"), ContainsSubstring("test.cfg:1"));
  CHECK_THAT(message_of("[lattice]\ndim = 1\npoints = 8\n[target]\nkind = sphere\n"), ContainsSubstring("lattice.dim"));
  CHECK_THAT(message_of("[lattice]\ndim = 2\npoints = 7\n[target]\nkind = sphere\n"), ContainsSubstring("lattice.points"));
  CHECK_THAT(message_of(std::string(kMinimal) + "[spin]\nshifts = 0.3 0\n"), ContainsSubstring("spin.shifts"));
  CHECK_THAT(message_of(std::string(kMinimal) + "[potential]\nkind = v9\n"), ContainsSubstring("potential"));
  CHECK_THAT(message_of(std::string(kMinimal) + "[potential]\nkind = v3\n"), ContainsSubstring("lambda"));
  CHECK_THAT(message_of(std::string(kMinimal) + "[solver]\nstep = 1.0\n"), ContainsSubstring("stability"));
  CHECK_THAT(message_of(std::string(kMinimal) + "[solver]\ntolerance = abc\n"), ContainsSubstring("solver.tolerance"));
  CHECK_THAT(message_of(std::string(kMinimal) + "[fields]\nspinor = eigen\n"), ContainsSubstring("spinor_eigenvalue"));
  CHECK_THROWS_AS(load_config("/nonexistent/dir/none.cfg"), ConfigurationError);
}

TEST_CASE("configuration hash ignores layout and tracks values", "[config]") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  std::string a = kMinimal;
  std::string b = "# same content\n[target]\nkind   =   sphere\n\n[lattice]\npoints = 8\ndim = 2\n";
  CHECK(parse_config(a).hash == parse_config(b).hash);
  CHECK(parse_config(a).hash != parse_config(a + "[run]\nseed = 2\n").hash);
}

TEST_CASE("fields are built from the configuration", "[config]") {
  RunConfig c = parse_config(kFull);
  FieldPair f = build_fields(c);
  CHECK(f.phi.geometry()->lattice().points(1) == 12);
  SpinorField d = TwistedDirac(f.phi).apply(f.psi);
  d.values -= 0.5 * f.psi.values;
  CHECK(l2_norm(d) <= 1e-9);

  RunConfig r = parse_config(std::string(kMinimal) + "[fields]\nmap = random\nspinor = random\n[run]\nseed = 3\n");
  FieldPair r1 = build_fields(r), r2 = build_fields(r);
  CHECK((r1.phi.values() - r2.phi.values()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((r1.psi.values - r2.psi.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK(spinor_tangency_defect(r1.psi, r1.phi) <= 1e-12);

  RunConfig t = parse_config(
      "[lattice]\ndim = 2\npoints = 8\n[target]\nkind = torus\n[fields]\nmap = random\nwinding = 1 0 0 1\n");
  FieldPair tf = build_fields(t);
  CHECK(tf.phi.winding() == Eigen::Matrix2i::Identity());
}

TEST_CASE("field files are resolved relative to the configuration", "[config]") {
  auto dir = std::filesystem::temp_directory_path() / "dhm_config_test";
  std::filesystem::create_directories(dir);
  RunConfig base = parse_config(std::string(kMinimal) + "[fields]\nmap = rotation\n[run]\nseed = 5\n");
  FieldPair f = build_fields(base);
  {
    std::ofstream os(dir / "phi.field");
    write_map_field(os, f.phi);
  }
  {
    std::ofstream os(dir / "run.cfg");
    os << kMinimal << "[fields]\nmap = file\nmap_file = phi.field\n";
  }
  RunConfig c = load_config((dir / "run.cfg").string());
  FieldPair g = build_fields(c);
  CHECK((g.phi.values() - f.phi.values()).cwiseAbs().maxCoeff() == 0.0);
  {
    std::ofstream os(dir / "bad.cfg");
    os << "[lattice]\ndim = 2\npoints = 10\n[target]\nkind = sphere\n[fields]\nmap = file\nmap_file = phi.field\n";
  }
  RunConfig bad = load_config((dir / "bad.cfg").string());
  CHECK_THROWS_AS(build_fields(bad), ConfigurationError);
  std::filesystem::remove_all(dir);
}
