#pragma once

// Text containers for lattice fields and JSON for potential specs and
// critical-point records. Doubles are written in shortest round-trip form, so
// reading back reproduces every bit.

#include <iosfwd>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "dhm/fields.hpp"
#include "dhm/potential.hpp"
#include "dhm/solvers.hpp"

namespace dhm {

std::string format_double(double x);
double parse_double(std::string_view s);

// Header (m, n, L, delta, target, q, stencil, kind) followed by one row per site.
void write_map_field(std::ostream& os, const MapField& phi);
MapField read_map_field(std::istream& is);
// Real and imaginary parts interleaved per component.
void write_spinor_field(std::ostream& os, const SpinorField& psi);
// The header must describe `geom`.
SpinorField read_spinor_field(std::istream& is, const GeometryPtr& geom);

std::string map_field_to_string(const MapField& phi);
MapField map_field_from_string(const std::string& s);
std::string spinor_field_to_string(const SpinorField& psi);
SpinorField spinor_field_from_string(const std::string& s, const GeometryPtr& geom);

nlohmann::json to_json(const MapFunction& f);
MapFunction map_function_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PotentialSpec& p);
PotentialSpec potential_spec_from_json(const nlohmann::json& j);

inline constexpr int kRecordVersion = 1;

nlohmann::json to_json(const CriticalPointRecord& r);
CriticalPointRecord record_from_json(const nlohmann::json& j);
void save_record(const std::string& path, const CriticalPointRecord& r);
CriticalPointRecord load_record(const std::string& path);

}  // namespace dhm
