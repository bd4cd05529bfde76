#pragma once

// Eigenpairs of the twisted Dirac operator, the truncated positivity
// analysis, the alternating flow towards critical points and the uncoupled
// solution constructors.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dhm/errors.hpp"
#include "dhm/fields.hpp"
#include "dhm/potential.hpp"

namespace dhm {

struct SpectrumResult {
  std::vector<double> eigenvalues;  // ascending
  std::vector<SpinorField> eigenspinors;
  std::vector<double> residuals;  // ||D psi_J - lambda_J psi_J||
  std::size_t requested = 0;
  std::size_t converged = 0;
  bool partial = false;
  double max_residual = 0.0;
  double orthonormality_defect = 0.0;
  std::string method;
};

struct LanczosOptions {
  std::size_t max_krylov = 400;
  double tolerance = 1e-8;
};

// k eigenpairs of D along phi nearest to zero. Dense when the tangent coordinate
// count is within kDenseDiracCap, otherwise Lanczos on D^2 followed by a
// Rayleigh-Ritz step for D.
SpectrumResult dirac_spectrum(const MapField& phi, std::size_t k);
SpectrumResult dirac_spectrum_lanczos(const MapField& phi, std::size_t k, const LanczosOptions& opt = {});
// Every eigenvalue (dense only).
Eigen::VectorXd dirac_eigenvalues(const MapField& phi);

struct PositivityReport {
  std::size_t cutoff = 0;
  double minimum = 0.0;  // min over unit coefficient vectors of sum |a_J|^2 lambda_J - 2 int V
  Eigen::VectorXcd minimizer;
  bool closed_form = false;
  // Along t * minimizer: values of the truncated functional for t = 1, 2, 4, ...
  std::vector<double> scaling_t;
  std::vector<double> scaling_values;
  bool unbounded_below = false;
  bool exponential_dominates = false;
  std::string note;
};
// Spectrum modes 0..cutoff-1 of `spec` (ascending order) span the truncated space.
PositivityReport positivity_report(const SpectrumResult& spec, const Potential& v, const MapField& phi,
                                   std::size_t cutoff, std::uint64_t seed = 1);

enum class SpinorHandling { FixedEigenmode, Resolve };

struct ModeSelector {
  enum class Kind { Zero, Kernel, LowestPositive, Eigenvalue } kind = Kind::Zero;
  double target = 0.0;

  static ModeSelector parse(const std::string& s);
  std::string str() const;
};

// Normalized eigenspinor picked from the dense spectrum along phi; zero for
// Kind::Zero. Throws Unsupported when no eigenvalue matches.
SpinorField select_spinor_mode(const MapField& phi, const ModeSelector& sel);

struct FlowConfig {
  double step = 0.0;  // 0: 1 / lambda_max of the lattice Laplacian
  std::size_t max_iter = 2000;
  double tolerance = 1e-10;
  SpinorHandling spinor = SpinorHandling::FixedEigenmode;
  ModeSelector mode;
  double damping = 0.5;
  std::size_t fixed_point_iter = 200;
  std::uint64_t seed = 1;

  // Largest stable explicit step for the spectral Laplacian on this lattice.
  static double stability_bound(const Lattice& lat);
  void validate(const Lattice& lat) const;
};

struct TraceEntry {
  std::size_t iteration = 0;
  double map_norm = 0.0;
  double spinor_norm = 0.0;
  double action = 0.0;
};

// Divergent flow: the residual grew tenfold over 100 steps.
class FlowDiverged : public NonConvergence {
 public:
  FlowDiverged(const std::string& what, std::vector<TraceEntry> trace)
      : NonConvergence(what), trace_(std::move(trace)) {}
  const std::vector<TraceEntry>& trace() const { return trace_; }

 private:
  std::vector<TraceEntry> trace_;
};

struct StressSummary {
  double symmetry_defect = 0.0;
  double max_abs_trace = 0.0;
  double trace_identity_defect = 0.0;
  double divergence_sup = 0.0;
};

struct JacobiSummary {
  bool computed = false;
  std::vector<double> lowest;
  double symmetry_defect = 0.0;
  std::size_t dimension = 0;
  std::string note;
};

struct CriticalPointRecord {
  std::string config_hash;
  std::uint64_t seed = 0;
  PotentialSpec potential;
  double tolerance = 0.0;
  MapField phi;
  SpinorField psi;
  double map_residual = 0.0;
  double spinor_residual = 0.0;
  double action = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  StressSummary stress;
  JacobiSummary jacobi;
  std::vector<TraceEntry> trace;
  bool residual_decreasing_tail = true;
};

StressSummary summarize_stress(const MapField& phi, const SpinorField& psi, const Potential& v);
// Records built automatically carry a Jacobi summary up to this dimension.
inline constexpr std::size_t kRecordJacobiCap = 1280;

JacobiSummary summarize_jacobi(const MapField& phi, const SpinorField& psi, const Potential& v, double tol,
                               std::size_t count = 10);

// Explicit flow phi <- P(phi + step * map residual), spinor per config. Stops at
// tolerance or max_iter (converged = false). Throws FlowDiverged when the
// residual grows tenfold over 100 steps.
CriticalPointRecord flow_to_critical_point(const MapField& phi0, const Potential& v, const FlowConfig& cfg,
                                           std::optional<SpinorField> psi0 = std::nullopt);

enum class SpinorRecipe { Zero, Kernel, Eigenmode };

// Harmonic map plus a spinor that solves its own equation; verified to 1e-8.
CriticalPointRecord make_uncoupled(const MapField& phi, SpinorRecipe recipe, const Potential& v,
                                   double eigenvalue = 0.0);

}  // namespace dhm
