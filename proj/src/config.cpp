#include "dhm/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "dhm/errors.hpp"
#include "dhm/io.hpp"
#include "dhm/sampling.hpp"

namespace dhm {

namespace pt = boost::property_tree;

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

const std::map<std::string, std::set<std::string>> kSchema{
    {"lattice", {"dim", "points", "length", "stencil"}},
    {"spin", {"shifts"}},
    {"target", {"kind", "ambient_dim"}},
    {"potential",
     {"kind", "lambda", "w", "coefficient", "s", "map_kind", "map_scalar", "map_vector", "map_matrix", "h_kind",
      "h_scalar", "h_vector", "h_matrix", "g_kind", "g_scalar", "g_vector", "g_matrix"}},
    {"fields",
     {"map", "map_point", "map_file", "map_wave", "map_amplitude", "winding", "spinor", "spinor_eigenvalue",
      "spinor_file", "spinor_wave", "record"}},
    {"solver",
     {"step", "max_iter", "tolerance", "spinor_handling", "mode", "damping", "fixed_point_iter", "spectrum_count",
      "positivity_cutoff"}},
    {"diagnostics", {"epsilon", "morrey_p", "morrey_lambda"}},
    {"output", {"dir"}},
    {"run", {"seed"}},
};

class Reader {
 public:
  Reader(const pt::ptree& tree, std::string source) : tree_(tree), source_(std::move(source)) {}

  bool has(const std::string& key) const { return tree_.get_optional<std::string>(path(key)).has_value(); }

  std::string str(const std::string& key) const {
    auto v = tree_.get_optional<std::string>(path(key));
    if (!v) fail(key, "missing required key");
    return *v;
  }
  std::string str(const std::string& key, const std::string& def) const { return has(key) ? str(key) : def; }

  double real(const std::string& key) const { return to_real(key, str(key)); }
  double real(const std::string& key, double def) const { return has(key) ? real(key) : def; }

  long long integer(const std::string& key) const { return to_int(key, str(key)); }
  long long integer(const std::string& key, long long def) const { return has(key) ? integer(key) : def; }

  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& t : split(str(key))) out.push_back(to_real(key, t));
    return out;
  }
  std::vector<long long> ints(const std::string& key) const {
    std::vector<long long> out;
    for (const auto& t : split(str(key))) out.push_back(to_int(key, t));
    return out;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigurationError(source_ + ": " + key + ": " + msg);
  }

 private:
  static pt::ptree::path_type path(const std::string& key) { return pt::ptree::path_type(key, '.'); }

  static std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (c == ',' || c == ' ' || c == '\t' || c == ';') {
        if (!cur.empty()) out.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
  }

  // Plain numbers, or a multiple of pi written as "2pi", "pi", "0.5pi".
  double to_real(const std::string& key, std::string s) const {
    double factor = 1.0;
    if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
      factor = std::numbers::pi;
      s.resize(s.size() - 2);
      if (s.empty()) s = "1";
    }
    double x = 0.0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), x);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(x)) fail(key, "not a number: '" + s + "'");
    return x * factor;
  }

  long long to_int(const std::string& key, const std::string& s) const {
    long long x = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), x);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) fail(key, "not an integer: '" + s + "'");
    return x;
  }

  const pt::ptree& tree_;
  std::string source_;
};

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

MapFunction read_map_function(const Reader& r, const std::string& prefix, int q) {
  const std::string kind = r.str("potential." + prefix + "_kind", "constant");
  const double scalar = r.real("potential." + prefix + "_scalar", 0.0);
  auto vec = [&] {
    const std::string key = "potential." + prefix + "_vector";
    std::vector<double> v = r.has(key) ? r.reals(key) : std::vector<double>(static_cast<std::size_t>(q), 0.0);
    if (static_cast<int>(v.size()) != q) r.fail(key, "needs " + std::to_string(q) + " entries");
    return to_vector(v);
  };
  if (kind == "constant") return MapFunction::constant(scalar, q);
  if (kind == "linear") {
    MapFunction f = MapFunction::linear(vec());
    return MapFunction::quadratic(scalar, f.vector(), f.matrix());
  }
  if (kind == "cosine") return MapFunction::cosine(scalar, vec());
  if (kind == "quadratic") {
    const std::string key = "potential." + prefix + "_matrix";
    std::vector<double> m = r.has(key) ? r.reals(key) : std::vector<double>(static_cast<std::size_t>(q * q), 0.0);
    if (static_cast<int>(m.size()) != q * q) r.fail(key, "needs q * q entries (row-major)");
    Eigen::MatrixXd c(q, q);
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j) c(i, j) = m[static_cast<std::size_t>(i * q + j)];
    return MapFunction::quadratic(scalar, vec(), c);
  }
  r.fail("potential." + prefix + "_kind", "expected constant, linear, quadratic or cosine");
}

}  // namespace

GeometryPtr RunConfig::geometry() const {
  return Geometry::make(Lattice(dim, points, lengths), SpinStructure::from_shifts(shifts), target_space(), stencil);
}

Target RunConfig::target_space() const {
  return target == TargetKind::Sphere ? Target::sphere(ambient_dim) : Target::flat_torus(ambient_dim);
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigurationError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  std::ostringstream canon;
  for (const auto& [section, body] : tree) {
    auto it = kSchema.find(section);
    if (it == kSchema.end()) {
      if (!body.data().empty()) throw ConfigurationError(source + ": key '" + section + "' outside any section");
      throw ConfigurationError(source + ": unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigurationError(source + ": unknown key " + section + "." + key);
      if (!value.empty()) throw ConfigurationError(source + ": " + section + "." + key + ": nested values not allowed");
    }
  }
  // Canonical listing in schema order for the hash.
  for (const auto& [section, keys] : kSchema)
    for (const auto& key : keys)
      if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(section + "." + key, '.')))
        canon << section << '.' << key << '=' << *v << '\n';

  Reader r(tree, source);
  RunConfig c;

  const long long dim = r.integer("lattice.dim");
  if (dim < 2 || dim > 3) r.fail("lattice.dim", "must be 2 or 3");
  c.dim = static_cast<int>(dim);
  auto pts = r.ints("lattice.points");
  if (pts.size() == 1) pts.assign(static_cast<std::size_t>(dim), pts[0]);
  if (static_cast<long long>(pts.size()) != dim) r.fail("lattice.points", "needs 1 or dim entries");
  std::vector<double> len = r.has("lattice.length") ? r.reals("lattice.length") : std::vector<double>{2 * std::numbers::pi};
  if (len.size() == 1) len.assign(static_cast<std::size_t>(dim), len[0]);
  if (static_cast<long long>(len.size()) != dim) r.fail("lattice.length", "needs 1 or dim entries");
  for (int i = 0; i < c.dim; ++i) {
    if (pts[static_cast<std::size_t>(i)] < 4 || pts[static_cast<std::size_t>(i)] > 4096 || pts[static_cast<std::size_t>(i)] % 2)
      r.fail("lattice.points", "entries must be even and between 4 and 4096");
    if (!(len[static_cast<std::size_t>(i)] > 0.0)) r.fail("lattice.length", "must be positive");
    c.points[static_cast<std::size_t>(i)] = static_cast<int>(pts[static_cast<std::size_t>(i)]);
    c.lengths[static_cast<std::size_t>(i)] = len[static_cast<std::size_t>(i)];
  }
  const std::string stencil = r.str("lattice.stencil", "spectral");
  if (stencil == "spectral")
    c.stencil = Stencil::Spectral;
  else if (stencil == "central")
    c.stencil = Stencil::CentralDifference;
  else
    r.fail("lattice.stencil", "expected spectral or central");

  c.shifts = r.has("spin.shifts") ? r.reals("spin.shifts") : std::vector<double>(static_cast<std::size_t>(dim), 0.0);
  if (static_cast<long long>(c.shifts.size()) != dim) r.fail("spin.shifts", "needs dim entries");
  for (double s : c.shifts)
    if (s != 0.0 && s != 0.5) r.fail("spin.shifts", "entries must be 0 or 0.5");

  const std::string tk = r.str("target.kind");
  if (tk == "sphere")
    c.target = TargetKind::Sphere;
  else if (tk == "torus")
    c.target = TargetKind::FlatTorus;
  else
    r.fail("target.kind", "expected sphere or torus");
  c.ambient_dim = static_cast<int>(r.integer("target.ambient_dim", c.target == TargetKind::Sphere ? 3 : dim));
  if (c.ambient_dim < (c.target == TargetKind::Sphere ? 2 : 1) || c.ambient_dim > 8)
    r.fail("target.ambient_dim", "out of range");
  const int q = c.ambient_dim;

  const std::string pk = r.str("potential.kind", "zero");
  try {
    switch (potential_kind_from_string(pk)) {
      case PotentialKind::Zero: c.potential = PotentialSpec::zero(); break;
      case PotentialKind::Structured:
        c.potential = PotentialSpec::structured(read_map_function(r, "h", q), read_map_function(r, "g", q),
                                                static_cast<int>(r.integer("potential.s", 2)));
        break;
      case PotentialKind::CurvatureV1:
        c.potential = PotentialSpec::curvature_v1();
        c.potential.coefficient = r.real("potential.coefficient", c.potential.coefficient);
        break;
      case PotentialKind::SuperpotentialV2: c.potential = PotentialSpec::superpotential_v2(to_vector(r.reals("potential.w"))); break;
      case PotentialKind::MassV3: c.potential = PotentialSpec::mass_v3(r.real("potential.lambda")); break;
      case PotentialKind::ExponentialV4: c.potential = PotentialSpec::exponential_v4(read_map_function(r, "map", q)); break;
      case PotentialKind::MapOnly: c.potential = PotentialSpec::map_only(read_map_function(r, "map", q)); break;
    }
    c.potential.validate(q);
  } catch (const ConfigurationError& e) {
    if (std::string(e.what()).rfind(source, 0) == 0) throw;
    r.fail("potential", e.what());
  }

  c.map_kind = r.str("fields.map", "constant");
  static const std::set<std::string> map_kinds{"constant", "equator", "identity", "rotation", "random", "file"};
  if (!map_kinds.count(c.map_kind)) r.fail("fields.map", "expected constant, equator, identity, rotation, random or file");
  if (r.has("fields.map_point")) {
    c.map_point = to_vector(r.reals("fields.map_point"));
    if (c.map_point.size() != q) r.fail("fields.map_point", "needs q entries");
  } else {
    c.map_point = Eigen::VectorXd::Zero(q);
    if (c.target == TargetKind::Sphere) c.map_point(q - 1) = 1.0;
  }
  c.map_file = r.str("fields.map_file", "");
  if (c.map_kind == "file" && c.map_file.empty()) r.fail("fields.map_file", "missing required key");
  c.map_wave = static_cast<int>(r.integer("fields.map_wave", 1));
  c.map_amplitude = r.real("fields.map_amplitude", 0.5);
  if (r.has("fields.winding")) {
    auto w = r.ints("fields.winding");
    if (static_cast<long long>(w.size()) != q * dim) r.fail("fields.winding", "needs q * dim entries (row-major)");
    c.winding.resize(q, c.dim);
    for (int a = 0; a < q; ++a)
      for (int i = 0; i < c.dim; ++i) c.winding(a, i) = static_cast<int>(w[static_cast<std::size_t>(a * c.dim + i)]);
  }
  c.spinor_kind = r.str("fields.spinor", "zero");
  static const std::set<std::string> spinor_kinds{"zero", "kernel", "eigen", "lowest-positive", "random", "file"};
  if (!spinor_kinds.count(c.spinor_kind))
    r.fail("fields.spinor", "expected zero, kernel, eigen, lowest-positive, random or file");
  c.spinor_eigenvalue = r.real("fields.spinor_eigenvalue", 0.0);
  if (c.spinor_kind == "eigen" && !r.has("fields.spinor_eigenvalue"))
    r.fail("fields.spinor_eigenvalue", "missing required key");
  c.spinor_file = r.str("fields.spinor_file", "");
  if (c.spinor_kind == "file" && c.spinor_file.empty()) r.fail("fields.spinor_file", "missing required key");
  c.spinor_wave = static_cast<int>(r.integer("fields.spinor_wave", 1));
  c.record_file = r.str("fields.record", "");

  c.flow.step = r.real("solver.step", 0.0);
  const long long mi = r.integer("solver.max_iter", 2000);
  if (mi < 1) r.fail("solver.max_iter", "must be positive");
  c.flow.max_iter = static_cast<std::size_t>(mi);
  c.flow.tolerance = r.real("solver.tolerance", 1e-10);
  const std::string sh = r.str("solver.spinor_handling", "fixed");
  if (sh == "fixed")
    c.flow.spinor = SpinorHandling::FixedEigenmode;
  else if (sh == "resolve")
    c.flow.spinor = SpinorHandling::Resolve;
  else
    r.fail("solver.spinor_handling", "expected fixed or resolve");
  try {
    c.flow.mode = ModeSelector::parse(r.str("solver.mode", "zero"));
  } catch (const ConfigurationError& e) {
    r.fail("solver.mode", e.what());
  }
  c.flow.damping = r.real("solver.damping", 0.5);
  const long long fp = r.integer("solver.fixed_point_iter", 200);
  if (fp < 1) r.fail("solver.fixed_point_iter", "must be positive");
  c.flow.fixed_point_iter = static_cast<std::size_t>(fp);
  const long long sc = r.integer("solver.spectrum_count", 8);
  if (sc < 1) r.fail("solver.spectrum_count", "must be positive");
  c.spectrum_count = static_cast<std::size_t>(sc);
  const long long pc = r.integer("solver.positivity_cutoff", 0);
  if (pc < 0 || pc > sc) r.fail("solver.positivity_cutoff", "must lie between 1 and spectrum_count");
  c.positivity_cutoff = static_cast<std::size_t>(pc);

  c.epsilon = r.real("diagnostics.epsilon", 0.1);
  if (!(c.epsilon > 0.0)) r.fail("diagnostics.epsilon", "must be positive");
  c.morrey_p = r.real("diagnostics.morrey_p", 2.0);
  if (!(c.morrey_p >= 1.0)) r.fail("diagnostics.morrey_p", "must be >= 1");
  c.morrey_lambda = r.real("diagnostics.morrey_lambda", 0.0);
  if (c.morrey_lambda < 0.0 || c.morrey_lambda > dim) r.fail("diagnostics.morrey_lambda", "must lie in (0, dim]");

  c.output_dir = r.str("output.dir", "out");
  const long long seed = r.integer("run.seed", 1);
  if (seed < 0) r.fail("run.seed", "must be nonnegative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.flow.seed = c.seed;

  try {
    c.flow.validate(Lattice(c.dim, c.points, c.lengths));
  } catch (const ConfigurationError& e) {
    r.fail("solver", e.what());
  }
  c.hash = fnv1a_hex(canon.str());
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigurationError("cannot read config file " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  RunConfig c = parse_config(ss.str(), path);
  // Input files are relative to the config file.
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  for (std::string* f : {&c.map_file, &c.spinor_file, &c.record_file})
    if (!f->empty() && std::filesystem::path(*f).is_relative()) *f = (base / *f).lexically_normal().string();
  return c;
}

FieldPair build_fields(RunConfig& cfg) {
  if (!cfg.record_file.empty()) {
    CriticalPointRecord rec = load_record(cfg.record_file);
    cfg.potential = rec.potential;
    return {rec.phi, rec.psi};
  }
  GeometryPtr g = cfg.geometry();
  Rng rng(cfg.seed);
  MapField phi;
  std::optional<FramedMap> framed;
  if (cfg.map_kind == "constant") {
    phi = project_to_target(g, constant_map(g, cfg.map_point).values());
  } else if (cfg.map_kind == "equator") {
    phi = equator_map(g);
  } else if (cfg.map_kind == "identity") {
    phi = identity_torus_map(g);
  } else if (cfg.map_kind == "rotation" || cfg.map_kind == "random") {
    if (cfg.target == TargetKind::Sphere) {
      framed = random_rotation_map(g, rng, cfg.map_wave);
      phi = framed->map;
    } else {
      phi = random_torus_map(g, rng, cfg.map_wave, cfg.map_amplitude, cfg.winding);
    }
  } else {
    std::ifstream is(cfg.map_file);
    if (!is) throw ConfigurationError("cannot read map file " + cfg.map_file);
    phi = read_map_field(is);
    const auto& pg = *phi.geometry();
    if (!(pg.lattice() == g->lattice()) || !(pg.spin() == g->spin()) || !(pg.target() == g->target()))
      throw ConfigurationError("map file does not match the configured lattice, spin structure and target");
  }
  SpinorField psi = SpinorField::zero(phi.geometry());
  if (cfg.spinor_kind == "kernel") {
    psi = select_spinor_mode(phi, ModeSelector{ModeSelector::Kind::Kernel, 0.0});
  } else if (cfg.spinor_kind == "eigen") {
    psi = select_spinor_mode(phi, ModeSelector{ModeSelector::Kind::Eigenvalue, cfg.spinor_eigenvalue});
  } else if (cfg.spinor_kind == "lowest-positive") {
    psi = select_spinor_mode(phi, ModeSelector{ModeSelector::Kind::LowestPositive, 0.0});
  } else if (cfg.spinor_kind == "random") {
    psi = framed ? random_frame_spinor(*framed, rng, cfg.spinor_wave) : random_spinor_field(phi, rng, cfg.spinor_wave);
  } else if (cfg.spinor_kind == "file") {
    std::ifstream is(cfg.spinor_file);
    if (!is) throw ConfigurationError("cannot read spinor file " + cfg.spinor_file);
    psi = read_spinor_field(is, phi.geometry());
  }
  return {phi, psi};
}

}  // namespace dhm
