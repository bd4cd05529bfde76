#include "dhm/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "dhm/errors.hpp"

namespace dhm {

std::string format_double(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view s) {
  double x = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ConfigurationError("not a number: '" + std::string(s) + "'");
  return x;
}

namespace {

constexpr const char* kMagic = "dhm-field";

std::vector<std::string> expect_line(std::istream& is, const std::string& key) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigurationError("field file truncated before '" + key + "'");
  std::istringstream ls(line);
  std::vector<std::string> tok;
  for (std::string t; ls >> t;) tok.push_back(t);
  if (tok.empty() || tok[0] != key) throw ConfigurationError("field file: expected '" + key + "', got '" + line + "'");
  tok.erase(tok.begin());
  return tok;
}

int parse_int(const std::string& s) {
  int v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ConfigurationError("not an integer: '" + s + "'");
  return v;
}

void write_header(std::ostream& os, const Geometry& g, const char* kind) {
  const auto& lat = g.lattice();
  const int m = lat.dim();
  os << kMagic << " 1\n" << "kind " << kind << "\n" << "dim " << m << "\n" << "points";
  for (int i = 0; i < m; ++i) os << ' ' << lat.points(i);
  os << "\nlengths";
  for (int i = 0; i < m; ++i) os << ' ' << format_double(lat.length(i));
  os << "\nshifts";
  for (int i = 0; i < m; ++i) os << ' ' << format_double(g.spin().shift(i));
  os << "\ntarget " << (g.target().kind() == TargetKind::Sphere ? "sphere" : "torus") << ' ' << g.q() << "\n";
  os << "stencil " << (g.derivatives().stencil() == Stencil::Spectral ? "spectral" : "central") << "\n";
}

GeometryPtr read_header(std::istream& is, const std::string& kind) {
  auto magic = expect_line(is, kMagic);
  if (magic.size() != 1 || magic[0] != "1") throw ConfigurationError("unsupported field file version");
  auto k = expect_line(is, "kind");
  if (k.size() != 1 || k[0] != kind) throw ConfigurationError("field file holds a different field kind");
  auto d = expect_line(is, "dim");
  if (d.size() != 1) throw ConfigurationError("field file: bad dim line");
  const int m = parse_int(d[0]);
  if (m < 1 || m > 3) throw DimensionError("field file: dimension must be 1, 2 or 3");
  auto p = expect_line(is, "points");
  auto l = expect_line(is, "lengths");
  auto s = expect_line(is, "shifts");
  if (static_cast<int>(p.size()) != m || static_cast<int>(l.size()) != m || static_cast<int>(s.size()) != m)
    throw ConfigurationError("field file: per-axis lines must have dim entries");
  std::array<int, 3> pts{1, 1, 1};
  std::array<double, 3> len{1.0, 1.0, 1.0};
  std::vector<double> sh;
  for (int i = 0; i < m; ++i) {
    pts[i] = parse_int(p[i]);
    len[i] = parse_double(l[i]);
    sh.push_back(parse_double(s[i]));
  }
  auto t = expect_line(is, "target");
  if (t.size() != 2) throw ConfigurationError("field file: bad target line");
  const int q = parse_int(t[1]);
  Target target = t[0] == "sphere" ? Target::sphere(q)
                  : t[0] == "torus" ? Target::flat_torus(q)
                                    : throw ConfigurationError("field file: unknown target '" + t[0] + "'");
  auto st = expect_line(is, "stencil");
  if (st.size() != 1 || (st[0] != "spectral" && st[0] != "central"))
    throw ConfigurationError("field file: bad stencil line");
  return Geometry::make(Lattice(m, pts, len), SpinStructure::from_shifts(sh), target,
                        st[0] == "spectral" ? Stencil::Spectral : Stencil::CentralDifference);
}

template <typename F>
void read_rows(std::istream& is, std::size_t rows, std::size_t cols, F&& put) {
  std::string line;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!std::getline(is, line)) throw ConfigurationError("field file truncated at row " + std::to_string(r));
    std::istringstream ls(line);
    std::size_t c = 0;
    for (std::string tok; ls >> tok; ++c) {
      if (c >= cols) throw ConfigurationError("field file: too many values in row " + std::to_string(r));
      put(r, c, parse_double(tok));
    }
    if (c != cols) throw ConfigurationError("field file: too few values in row " + std::to_string(r));
  }
}

}  // namespace

void write_map_field(std::ostream& os, const MapField& phi) {
  const auto& g = *phi.geometry();
  write_header(os, g, "map");
  const int q = g.q();
  os << "winding";
  const Eigen::MatrixXi& w = phi.winding();
  for (int a = 0; a < q; ++a)
    for (int i = 0; i < g.dim(); ++i) os << ' ' << (w.size() ? w(a, i) : 0);
  os << "\ndata\n";
  for (std::size_t s = 0; s < g.sites(); ++s) {
    for (int a = 0; a < q; ++a) os << (a ? " " : "") << format_double(phi.at(s)(a));
    os << '\n';
  }
}

MapField read_map_field(std::istream& is) {
  GeometryPtr g = read_header(is, "map");
  const int q = g->q(), m = g->dim();
  auto wt = expect_line(is, "winding");
  if (static_cast<int>(wt.size()) != q * m) throw ConfigurationError("field file: winding needs q * dim entries");
  Eigen::MatrixXi w(q, m);
  for (int a = 0; a < q; ++a)
    for (int i = 0; i < m; ++i) w(a, i) = parse_int(wt[static_cast<std::size_t>(a * m + i)]);
  expect_line(is, "data");
  Eigen::VectorXd v(static_cast<Eigen::Index>(g->sites() * q));
  read_rows(is, g->sites(), static_cast<std::size_t>(q),
            [&](std::size_t r, std::size_t c, double x) { v(static_cast<Eigen::Index>(r * q + c)) = x; });
  return MapField(g, v, w.isZero() ? Eigen::MatrixXi() : w);
}

void write_spinor_field(std::ostream& os, const SpinorField& psi) {
  const auto& g = *psi.geom;
  write_header(os, g, "spinor");
  os << "data\n";
  const int c = g.spinor_components();
  for (std::size_t s = 0; s < g.sites(); ++s) {
    for (int k = 0; k < c; ++k) {
      cplx z = psi.values(static_cast<Eigen::Index>(s * c + k));
      os << (k ? " " : "") << format_double(z.real()) << ' ' << format_double(z.imag());
    }
    os << '\n';
  }
}

SpinorField read_spinor_field(std::istream& is, const GeometryPtr& geom) {
  GeometryPtr g = read_header(is, "spinor");
  if (!(g->lattice() == geom->lattice()) || !(g->spin() == geom->spin()) || !(g->target() == geom->target()))
    throw ConfigurationError("spinor file does not match the map geometry");
  expect_line(is, "data");
  SpinorField psi = SpinorField::zero(geom);
  const int c = geom->spinor_components();
  read_rows(is, geom->sites(), static_cast<std::size_t>(2 * c), [&](std::size_t r, std::size_t k, double x) {
    auto& z = psi.values(static_cast<Eigen::Index>(r * c + k / 2));
    if (k % 2 == 0)
      z.real(x);
    else
      z.imag(x);
  });
  return psi;
}

std::string map_field_to_string(const MapField& phi) {
  std::ostringstream os;
  write_map_field(os, phi);
  return os.str();
}

MapField map_field_from_string(const std::string& s) {
  std::istringstream is(s);
  return read_map_field(is);
}

std::string spinor_field_to_string(const SpinorField& psi) {
  std::ostringstream os;
  write_spinor_field(os, psi);
  return os.str();
}

SpinorField spinor_field_from_string(const std::string& s, const GeometryPtr& geom) {
  std::istringstream is(s);
  return read_spinor_field(is, geom);
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from(const nlohmann::json& j) {
  auto x = j.get<std::vector<double>>();
  return Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

}  // namespace

nlohmann::json to_json(const MapFunction& f) {
  nlohmann::json j;
  if (f.kind() == MapFunction::Kind::Cosine) {
    j["kind"] = "cosine";
    j["amplitude"] = f.scalar();
    j["a"] = vec_json(f.vector());
  } else {
    j["kind"] = "quadratic";
    j["c0"] = f.scalar();
    j["b"] = vec_json(f.vector());
    const Eigen::MatrixXd& c = f.matrix();
    std::vector<double> rows;
    for (Eigen::Index r = 0; r < c.rows(); ++r)
      for (Eigen::Index k = 0; k < c.cols(); ++k) rows.push_back(c(r, k));
    j["c"] = rows;
  }
  return j;
}

MapFunction map_function_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "cosine") return MapFunction::cosine(j.at("amplitude").get<double>(), vec_from(j.at("a")));
  if (kind != "quadratic") throw ConfigurationError("unknown map function kind '" + kind + "'");
  Eigen::VectorXd b = vec_from(j.at("b"));
  Eigen::VectorXd flat = vec_from(j.at("c"));
  const auto q = b.size();
  if (flat.size() != q * q) throw ConfigurationError("quadratic map function: matrix size mismatch");
  Eigen::MatrixXd c(q, q);
  for (Eigen::Index r = 0; r < q; ++r)
    for (Eigen::Index k = 0; k < q; ++k) c(r, k) = flat(r * q + k);
  return MapFunction::quadratic(j.at("c0").get<double>(), b, c);
}

nlohmann::json to_json(const PotentialSpec& p) {
  nlohmann::json j;
  j["kind"] = to_string(p.kind);
  switch (p.kind) {
    case PotentialKind::Zero: break;
    case PotentialKind::Structured:
      j["h"] = to_json(p.h);
      j["g"] = to_json(p.g);
      j["s"] = p.s;
      break;
    case PotentialKind::CurvatureV1: j["coefficient"] = p.coefficient; break;
    case PotentialKind::SuperpotentialV2: j["w"] = vec_json(p.w); break;
    case PotentialKind::MassV3: j["lambda"] = p.lambda; break;
    case PotentialKind::ExponentialV4:
    case PotentialKind::MapOnly: j["map"] = to_json(p.map); break;
  }
  return j;
}

PotentialSpec potential_spec_from_json(const nlohmann::json& j) {
  PotentialSpec p;
  p.kind = potential_kind_from_string(j.at("kind").get<std::string>());
  switch (p.kind) {
    case PotentialKind::Zero: break;
    case PotentialKind::Structured:
      p.h = map_function_from_json(j.at("h"));
      p.g = map_function_from_json(j.at("g"));
      p.s = j.at("s").get<int>();
      break;
    case PotentialKind::CurvatureV1: p.coefficient = j.at("coefficient").get<double>(); break;
    case PotentialKind::SuperpotentialV2: p.w = vec_from(j.at("w")); break;
    case PotentialKind::MassV3: p.lambda = j.at("lambda").get<double>(); break;
    case PotentialKind::ExponentialV4:
    case PotentialKind::MapOnly: p.map = map_function_from_json(j.at("map")); break;
  }
  return p;
}

nlohmann::json to_json(const CriticalPointRecord& r) {
  nlohmann::json j;
  j["format"] = "dhm-critical-point";
  j["version"] = kRecordVersion;
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  j["tolerance"] = r.tolerance;
  j["potential"] = to_json(r.potential);
  j["map"] = map_field_to_string(r.phi);
  j["spinor"] = spinor_field_to_string(r.psi);
  j["map_residual"] = r.map_residual;
  j["spinor_residual"] = r.spinor_residual;
  j["action"] = r.action;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["residual_decreasing_tail"] = r.residual_decreasing_tail;
  j["stress"] = {{"symmetry_defect", r.stress.symmetry_defect},
                 {"max_abs_trace", r.stress.max_abs_trace},
                 {"trace_identity_defect", r.stress.trace_identity_defect},
                 {"divergence_sup", r.stress.divergence_sup}};
  j["jacobi"] = {{"computed", r.jacobi.computed},
                 {"lowest", r.jacobi.lowest},
                 {"symmetry_defect", r.jacobi.symmetry_defect},
                 {"dimension", r.jacobi.dimension},
                 {"note", r.jacobi.note}};
  nlohmann::json tr = nlohmann::json::array();
  for (const auto& t : r.trace) tr.push_back({t.iteration, t.map_norm, t.spinor_norm, t.action});
  j["trace"] = tr;
  return j;
}

CriticalPointRecord record_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "dhm-critical-point") throw ConfigurationError("not a critical-point record");
    if (j.at("version").get<int>() != kRecordVersion) throw ConfigurationError("unsupported record version");
    CriticalPointRecord r;
    r.config_hash = j.at("config_hash").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.tolerance = j.at("tolerance").get<double>();
    r.potential = potential_spec_from_json(j.at("potential"));
    r.phi = map_field_from_string(j.at("map").get<std::string>());
    r.psi = spinor_field_from_string(j.at("spinor").get<std::string>(), r.phi.geometry());
    r.map_residual = j.at("map_residual").get<double>();
    r.spinor_residual = j.at("spinor_residual").get<double>();
    r.action = j.at("action").get<double>();
    r.converged = j.at("converged").get<bool>();
    r.iterations = j.at("iterations").get<std::size_t>();
    r.residual_decreasing_tail = j.at("residual_decreasing_tail").get<bool>();
    const auto& s = j.at("stress");
    r.stress = {s.at("symmetry_defect").get<double>(), s.at("max_abs_trace").get<double>(),
                s.at("trace_identity_defect").get<double>(), s.at("divergence_sup").get<double>()};
    const auto& jc = j.at("jacobi");
    r.jacobi.computed = jc.at("computed").get<bool>();
    r.jacobi.lowest = jc.at("lowest").get<std::vector<double>>();
    r.jacobi.symmetry_defect = jc.at("symmetry_defect").get<double>();
    r.jacobi.dimension = jc.at("dimension").get<std::size_t>();
    r.jacobi.note = jc.at("note").get<std::string>();
    for (const auto& t : j.at("trace"))
      r.trace.push_back({t.at(0).get<std::size_t>(), t.at(1).get<double>(), t.at(2).get<double>(), t.at(3).get<double>()});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("malformed critical-point record: ") + e.what());
  }
}

void save_record(const std::string& path, const CriticalPointRecord& r) {
  std::ofstream os(path);
  if (!os) throw ConfigurationError("cannot write " + path);
  os << to_json(r).dump(1) << '\n';
}

CriticalPointRecord load_record(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigurationError("cannot read " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(path + ": " + e.what());
  }
  return record_from_json(j);
}

}  // namespace dhm
