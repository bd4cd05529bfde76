#include "dhm/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dhm/errors.hpp"

namespace dhm {

namespace {

double re_pair(const Eigen::Ref<const Eigen::MatrixXcd>& a, const Eigen::Ref<const Eigen::MatrixXcd>& b) {
  return (a.conjugate().cwiseProduct(b)).sum().real();
}

}  // namespace

MapFunction MapFunction::quadratic(double c0, Eigen::VectorXd b, Eigen::MatrixXd c) {
  if (c.rows() != b.size() || c.cols() != b.size()) throw ConfigurationError("quadratic map function: size mismatch");
  MapFunction f;
  f.kind_ = Kind::Quadratic;
  f.scalar_ = c0;
  f.vec_ = std::move(b);
  f.mat_ = 0.5 * (c + c.transpose());
  return f;
}

MapFunction MapFunction::constant(double c0, int q) {
  return quadratic(c0, Eigen::VectorXd::Zero(q), Eigen::MatrixXd::Zero(q, q));
}

MapFunction MapFunction::linear(Eigen::VectorXd b) {
  const auto q = b.size();
  return quadratic(0.0, std::move(b), Eigen::MatrixXd::Zero(q, q));
}

MapFunction MapFunction::cosine(double amp, Eigen::VectorXd a) {
  MapFunction f;
  f.kind_ = Kind::Cosine;
  f.scalar_ = amp;
  f.vec_ = std::move(a);
  return f;
}

double MapFunction::value(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  if (kind_ == Kind::Cosine) return scalar_ * std::cos(vec_.dot(y));
  return scalar_ + vec_.dot(y) + 0.5 * y.dot(mat_ * y);
}

Eigen::VectorXd MapFunction::gradient(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  if (kind_ == Kind::Cosine) return -scalar_ * std::sin(vec_.dot(y)) * vec_;
  return vec_ + mat_ * y;
}

Eigen::MatrixXd MapFunction::hessian(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  if (kind_ == Kind::Cosine) return -scalar_ * std::cos(vec_.dot(y)) * vec_ * vec_.transpose();
  return mat_;
}

double SpinorFactor::value(const Eigen::Ref<const Eigen::MatrixXcd>& psi) const {
  const double r = psi.squaredNorm();
  switch (kind_) {
    case Kind::One:
      return 1.0;
    case Kind::NormPow:
      return std::pow(r, s_ / 2);
    case Kind::CurvatureQuartic: {
      Eigen::MatrixXcd p = psi.adjoint() * psi;
      return r * r - p.squaredNorm();
    }
    case Kind::Exp:
      return std::exp(r);
  }
  return 0.0;
}

Eigen::MatrixXcd SpinorFactor::gradient(const Eigen::Ref<const Eigen::MatrixXcd>& psi) const {
  const double r = psi.squaredNorm();
  switch (kind_) {
    case Kind::One:
      return Eigen::MatrixXcd::Zero(psi.rows(), psi.cols());
    case Kind::NormPow:
      return s_ * std::pow(r, s_ / 2 - 1) * psi;
    case Kind::CurvatureQuartic: {
      Eigen::MatrixXcd p = psi.adjoint() * psi;
      return 4.0 * (r * psi - psi * p);
    }
    case Kind::Exp:
      return 2.0 * std::exp(r) * psi;
  }
  return {};
}

Eigen::MatrixXcd SpinorFactor::linearization(const Eigen::Ref<const Eigen::MatrixXcd>& psi,
                                             const Eigen::Ref<const Eigen::MatrixXcd>& xi) const {
  const double r = psi.squaredNorm();
  const double rp = re_pair(psi, xi);
  switch (kind_) {
    case Kind::One:
      return Eigen::MatrixXcd::Zero(psi.rows(), psi.cols());
    case Kind::NormPow: {
      Eigen::MatrixXcd out = s_ * std::pow(r, s_ / 2 - 1) * xi;
      if (s_ > 2) out += s_ * (s_ - 2) * std::pow(r, s_ / 2 - 2) * rp * psi;
      return out;
    }
    case Kind::CurvatureQuartic: {
      Eigen::MatrixXcd p = psi.adjoint() * psi;
      Eigen::MatrixXcd dp = xi.adjoint() * psi + psi.adjoint() * xi;
      return 4.0 * (2.0 * rp * psi + r * xi - xi * p - psi * dp);
    }
    case Kind::Exp:
      return 2.0 * std::exp(r) * (2.0 * rp * psi + xi);
  }
  return {};
}

std::string to_string(PotentialKind k) {
  switch (k) {
    case PotentialKind::Zero:
      return "zero";
    case PotentialKind::Structured:
      return "structured";
    case PotentialKind::CurvatureV1:
      return "v1";
    case PotentialKind::SuperpotentialV2:
      return "v2";
    case PotentialKind::MassV3:
      return "v3";
    case PotentialKind::ExponentialV4:
      return "v4";
    case PotentialKind::MapOnly:
      return "map";
  }
  return "?";
}

PotentialKind potential_kind_from_string(const std::string& s) {
  for (auto k : {PotentialKind::Zero, PotentialKind::Structured, PotentialKind::CurvatureV1,
                 PotentialKind::SuperpotentialV2, PotentialKind::MassV3, PotentialKind::ExponentialV4,
                 PotentialKind::MapOnly})
    if (to_string(k) == s) return k;
  throw ConfigurationError("unknown potential kind '" + s + "'");
}

PotentialSpec PotentialSpec::zero() { return {}; }

PotentialSpec PotentialSpec::structured(MapFunction h, MapFunction g, int s) {
  PotentialSpec p;
  p.kind = PotentialKind::Structured;
  p.h = std::move(h);
  p.g = std::move(g);
  p.s = s;
  return p;
}

PotentialSpec PotentialSpec::curvature_v1() {
  PotentialSpec p;
  p.kind = PotentialKind::CurvatureV1;
  return p;
}

PotentialSpec PotentialSpec::superpotential_v2(Eigen::VectorXd w) {
  PotentialSpec p;
  p.kind = PotentialKind::SuperpotentialV2;
  p.w = std::move(w);
  return p;
}

PotentialSpec PotentialSpec::mass_v3(double lambda) {
  PotentialSpec p;
  p.kind = PotentialKind::MassV3;
  p.lambda = lambda;
  return p;
}

PotentialSpec PotentialSpec::exponential_v4(MapFunction map) {
  PotentialSpec p;
  p.kind = PotentialKind::ExponentialV4;
  p.map = std::move(map);
  return p;
}

PotentialSpec PotentialSpec::map_only(MapFunction map) {
  PotentialSpec p;
  p.kind = PotentialKind::MapOnly;
  p.map = std::move(map);
  return p;
}

void PotentialSpec::validate(int q) const {
  switch (kind) {
    case PotentialKind::Structured:
      if (s < 2 || s % 2 != 0) throw ConfigurationError("structured potential needs even s >= 2");
      if (h.ambient_dim() != q || g.ambient_dim() != q)
        throw ConfigurationError("structured potential coefficients must act on R^q");
      break;
    case PotentialKind::SuperpotentialV2:
      if (w.size() != q) throw ConfigurationError("superpotential vector must have q entries");
      break;
    case PotentialKind::MassV3:
      if (!(lambda > 0.0)) throw ConfigurationError("mass potential needs lambda > 0");
      break;
    case PotentialKind::ExponentialV4:
    case PotentialKind::MapOnly:
      if (map.ambient_dim() != q) throw ConfigurationError("map potential must act on R^q");
      break;
    default:
      break;
  }
}

Potential::Potential(PotentialSpec spec, const Target& target) : spec_(std::move(spec)), target_(target) {
  const int q = target.ambient_dim();
  spec_.validate(q);
  const double k = target.curvature();
  switch (spec_.kind) {
    case PotentialKind::Zero:
      break;
    case PotentialKind::Structured:
      terms_.push_back({1.0, spec_.h, SpinorFactor::one()});
      terms_.push_back({1.0, spec_.g, SpinorFactor::norm_pow(spec_.s)});
      break;
    case PotentialKind::CurvatureV1:
      if (k != 0.0) terms_.push_back({spec_.coefficient * k, MapFunction::constant(1.0, q), SpinorFactor::curvature_quartic()});
      break;
    case PotentialKind::SuperpotentialV2: {
      const Eigen::VectorXd& a = spec_.w;
      terms_.push_back({1.0, MapFunction::quadratic(0.5 * a.squaredNorm(), Eigen::VectorXd::Zero(q), -k * a * a.transpose()),
                        SpinorFactor::one()});
      if (k != 0.0) {
        terms_.push_back({1.0, MapFunction::linear(-0.5 * k * a), SpinorFactor::norm_pow(2)});
        terms_.push_back({-k / 12.0, MapFunction::constant(1.0, q), SpinorFactor::curvature_quartic()});
      }
      break;
    }
    case PotentialKind::MassV3:
      terms_.push_back({0.5 * spec_.lambda, MapFunction::constant(1.0, q), SpinorFactor::norm_pow(2)});
      break;
    case PotentialKind::ExponentialV4:
      terms_.push_back({1.0, spec_.map, SpinorFactor::one()});
      terms_.push_back({-1.0, MapFunction::constant(1.0, q), SpinorFactor::exp_norm()});
      break;
    case PotentialKind::MapOnly:
      terms_.push_back({1.0, spec_.map, SpinorFactor::one()});
      break;
  }
}

int Potential::growth_exponent() const {
  int s = 0;
  for (const auto& t : terms_) {
    if (t.g.kind() == SpinorFactor::Kind::Exp) return -1;
    s = std::max(s, t.g.power());
  }
  return s;
}

double Potential::value_at(const Eigen::Ref<const Eigen::VectorXd>& y,
                           const Eigen::Ref<const Eigen::MatrixXcd>& psi) const {
  double v = 0.0;
  for (const auto& t : terms_) v += t.coefficient * t.f.value(y) * t.g.value(psi);
  return v;
}

Eigen::VectorXd Potential::grad_map_at(const Eigen::Ref<const Eigen::VectorXd>& y,
                                       const Eigen::Ref<const Eigen::MatrixXcd>& psi) const {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(y.size());
  for (const auto& t : terms_) grad += t.coefficient * t.g.value(psi) * t.f.gradient(y);
  return target_.projector(y) * grad;
}

Eigen::MatrixXcd Potential::grad_spinor_at(const Eigen::Ref<const Eigen::VectorXd>& y,
                                           const Eigen::Ref<const Eigen::MatrixXcd>& psi) const {
  Eigen::MatrixXcd grad = Eigen::MatrixXcd::Zero(psi.rows(), psi.cols());
  for (const auto& t : terms_) {
    if (t.g.kind() == SpinorFactor::Kind::One) continue;
    grad += t.coefficient * t.f.value(y) * t.g.gradient(psi);
  }
  return grad * target_.projector(y).cast<cplx>();
}

Eigen::VectorXd Potential::density(const MapField& phi, const SpinorField& psi) const {
  const auto& g = *phi.geometry();
  Eigen::VectorXd v(static_cast<Eigen::Index>(g.sites()));
  for (std::size_t s = 0; s < g.sites(); ++s) v(s) = value_at(phi.at(s), psi.at(s));
  return v;
}

double Potential::integral(const MapField& phi, const SpinorField& psi) const {
  return density(phi, psi).sum() * phi.geometry()->lattice().cell_volume();
}

TangentField Potential::grad_map(const MapField& phi, const SpinorField& psi) const {
  TangentField out = TangentField::zero(phi.geometry());
  for (std::size_t s = 0; s < phi.geometry()->sites(); ++s) out.at(s) = grad_map_at(phi.at(s), psi.at(s));
  return out;
}

SpinorField Potential::grad_spinor(const MapField& phi, const SpinorField& psi) const {
  SpinorField out = SpinorField::zero(phi.geometry());
  for (std::size_t s = 0; s < phi.geometry()->sites(); ++s) out.at(s) = grad_spinor_at(phi.at(s), psi.at(s));
  return out;
}

TangentField Potential::hessian_map(const MapField& phi, const SpinorField& psi, const TangentField& eta) const {
  const double k = target_.curvature();
  TangentField out = TangentField::zero(phi.geometry());
  for (std::size_t s = 0; s < phi.geometry()->sites(); ++s) {
    auto y = phi.at(s);
    Eigen::VectorXd e = eta.at(s);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(y.size());
    for (const auto& t : terms_) {
      double gv = t.coefficient * t.g.value(psi.at(s));
      acc += gv * (t.f.hessian(y) * e - k * t.f.gradient(y).dot(y) * e);
    }
    out.at(s) = target_.projector(y) * acc;
  }
  return out;
}

Eigen::VectorXd Potential::iota_xi_xi(const MapField& phi, const SpinorField& psi, const SpinorField& xi) const {
  const auto& g = *phi.geometry();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.sites()));
  for (std::size_t s = 0; s < g.sites(); ++s)
    for (const auto& t : terms_) {
      if (t.g.kind() == SpinorFactor::Kind::One) continue;
      out(s) += t.coefficient * t.f.value(phi.at(s)) * re_pair(xi.at(s), t.g.linearization(psi.at(s), xi.at(s)));
    }
  return out;
}

TangentField Potential::iota_xi_grad(const MapField& phi, const SpinorField& psi, const SpinorField& xi) const {
  TangentField out = TangentField::zero(phi.geometry());
  for (std::size_t s = 0; s < phi.geometry()->sites(); ++s) {
    auto y = phi.at(s);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(y.size());
    for (const auto& t : terms_) {
      if (t.g.kind() == SpinorFactor::Kind::One) continue;
      acc += t.coefficient * re_pair(t.g.gradient(psi.at(s)), xi.at(s)) * t.f.gradient(y);
    }
    out.at(s) = target_.projector(y) * acc;
  }
  return out;
}

SpinorField Potential::spinor_linearization(const MapField& phi, const SpinorField& psi, const SpinorField& xi) const {
  SpinorField out = SpinorField::zero(phi.geometry());
  for (std::size_t s = 0; s < phi.geometry()->sites(); ++s) {
    auto y = phi.at(s);
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(psi.at(s).rows(), psi.at(s).cols());
    for (const auto& t : terms_) {
      if (t.g.kind() == SpinorFactor::Kind::One) continue;
      acc += t.coefficient * t.f.value(y) * t.g.linearization(psi.at(s), xi.at(s));
    }
    out.at(s) = acc * target_.projector(y).cast<cplx>();
  }
  return out;
}

SpinorField Potential::mixed_spinor(const MapField& phi, const SpinorField& psi, const TangentField& eta) const {
  SpinorField out = SpinorField::zero(phi.geometry());
  for (std::size_t s = 0; s < phi.geometry()->sites(); ++s) {
    auto y = phi.at(s);
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(psi.at(s).rows(), psi.at(s).cols());
    for (const auto& t : terms_) {
      if (t.g.kind() == SpinorFactor::Kind::One) continue;
      acc += t.coefficient * t.f.gradient(y).dot(eta.at(s)) * t.g.gradient(psi.at(s));
    }
    out.at(s) = acc * target_.projector(y).cast<cplx>();
  }
  return out;
}

namespace {

struct Fit {
  double slope = 0.0;
  bool zero = false;
  bool finite = true;
  double first_local = 0.0;
  double last_local = 0.0;
};

Fit loglog_fit(const std::vector<double>& t, const std::vector<double>& v) {
  Fit f;
  double vmax = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) f.finite = false;
    else vmax = std::max(vmax, x);
  }
  if (!f.finite) return f;
  if (vmax <= 1e-300) {
    f.zero = true;
    return f;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (v[i] <= 0.0) continue;
    double x = std::log(t[i]), y = std::log(v[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) {
    f.zero = true;
    return f;
  }
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  auto local = [&](std::size_t i) { return std::log(v[i + 1] / v[i]) / std::log(t[i + 1] / t[i]); };
  if (v.front() > 0 && v[1] > 0) f.first_local = local(0);
  if (v[v.size() - 2] > 0 && v.back() > 0) f.last_local = local(v.size() - 2);
  return f;
}

}  // namespace

GrowthReport growth_report(const Potential& v, const MapField& phi, const SpinorField& psi,
                           const std::vector<double>& magnitudes) {
  GrowthReport rep;
  rep.magnitudes = magnitudes;
  rep.declared_exponent = v.growth_exponent();
  const auto& g = *phi.geometry();
  std::size_t site = 0;
  double best = -1.0;
  for (std::size_t s = 0; s < g.sites(); ++s) {
    double r = psi.at(s).norm();
    if (r > best) {
      best = r;
      site = s;
    }
  }
  double lo = magnitudes.empty() ? 0.0 : *std::min_element(magnitudes.begin(), magnitudes.end());
  double hi = magnitudes.empty() ? 0.0 : *std::max_element(magnitudes.begin(), magnitudes.end());
  if (magnitudes.size() < 3 || !(lo > 0.0) || hi / lo < 1e3 || !(best > 0.0)) {
    rep.conclusive = false;
    rep.note = "degenerate samples: need at least 3 positive magnitudes spanning 3 decades and a nonzero spinor";
    return rep;
  }
  std::vector<double> ts(magnitudes);
  std::sort(ts.begin(), ts.end());
  auto y = phi.at(site);
  Eigen::MatrixXcd unit = psi.at(site) / best;
  Eigen::MatrixXcd zero = Eigen::MatrixXcd::Zero(unit.rows(), unit.cols());
  const double v0 = v.value_at(y, zero);
  const Eigen::VectorXd gv0 = v.grad_map_at(y, zero);
  std::vector<double> val, gm, gs;
  for (double t : ts) {
    Eigen::MatrixXcd p = t * unit;
    val.push_back(std::abs(v.value_at(y, p) - v0));
    gm.push_back((v.grad_map_at(y, p) - gv0).norm());
    gs.push_back(v.grad_spinor_at(y, p).norm());
  }
  Fit fv = loglog_fit(ts, val), fm = loglog_fit(ts, gm), fs = loglog_fit(ts, gs);
  rep.slope_value = fv.slope;
  rep.slope_map_gradient = fm.slope;
  rep.slope_spinor_gradient = fs.slope;
  bool nonfinite = !fv.finite || !fm.finite || !fs.finite;
  bool accelerating = (!fv.zero && fv.last_local - fv.first_local > 1.0) || (!fs.zero && fs.last_local - fs.first_local > 1.0);
  if (nonfinite || accelerating || rep.declared_exponent < 0) {
    rep.super_polynomial = true;
    rep.within_bounds = false;
    rep.slope_value = fv.finite ? fv.slope : std::numeric_limits<double>::infinity();
    rep.slope_map_gradient = fm.finite ? fm.slope : std::numeric_limits<double>::infinity();
    rep.slope_spinor_gradient = fs.finite ? fs.slope : std::numeric_limits<double>::infinity();
    rep.note = "super-polynomial growth: outside the polynomial growth scope of the regularity theory";
    return rep;
  }
  const double s = rep.declared_exponent;
  rep.within_bounds = rep.slope_value <= s + 0.1 && rep.slope_map_gradient <= s + 0.1 &&
                      rep.slope_spinor_gradient <= std::max(0.0, s - 1.0) + 0.1;
  rep.note = rep.within_bounds ? "slopes within the polynomial growth bounds" : "slopes exceed the declared growth exponent";
  return rep;
}

}  // namespace dhm
