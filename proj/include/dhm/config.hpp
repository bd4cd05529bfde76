#pragma once

// Run configuration: INI-style sections of key = value pairs. Unknown
// sections or keys are rejected; see README for the schema.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dhm/fields.hpp"
#include "dhm/potential.hpp"
#include "dhm/solvers.hpp"

namespace dhm {

struct RunConfig {
  // [lattice]
  int dim = 2;
  std::array<int, 3> points{1, 1, 1};
  std::array<double, 3> lengths{1.0, 1.0, 1.0};
  Stencil stencil = Stencil::Spectral;
  // [spin]
  std::vector<double> shifts;
  // [target]
  TargetKind target = TargetKind::Sphere;
  int ambient_dim = 3;
  // [potential]
  PotentialSpec potential;
  // [fields]
  std::string map_kind = "constant";
  Eigen::VectorXd map_point;
  std::string map_file;
  int map_wave = 1;
  double map_amplitude = 0.5;
  Eigen::MatrixXi winding;
  std::string spinor_kind = "zero";
  double spinor_eigenvalue = 0.0;
  std::string spinor_file;
  int spinor_wave = 1;
  std::string record_file;
  // [solver]
  FlowConfig flow;
  std::size_t spectrum_count = 8;
  std::size_t positivity_cutoff = 0;  // 0: spectrum_count
  // [diagnostics]
  double epsilon = 0.1;
  double morrey_p = 2.0;
  double morrey_lambda = 0.0;  // 0: m
  // [output]
  std::string output_dir = "out";
  // [run]
  std::uint64_t seed = 1;

  std::string hash;  // of the canonical key = value listing

  GeometryPtr geometry() const;
  Target target_space() const;
};

// Throws ConfigurationError with the offending line or section.key.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
// Relative map, spinor and record paths are resolved against the config directory.
RunConfig load_config(const std::string& path);

// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(const std::string& s);

struct FieldPair {
  MapField phi;
  SpinorField psi;
};
// Fields per the [fields] section. A record file also supplies the potential.
FieldPair build_fields(RunConfig& cfg);

}  // namespace dhm
