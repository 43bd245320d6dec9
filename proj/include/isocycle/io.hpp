#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "isocycle/group.hpp"
#include "isocycle/types.hpp"

namespace isocycle {

using OrderedJson = nlohmann::ordered_json;

/// Decimal with 17 significant digits; deterministic across runs.
std::string format_double(double x);

/// [re, im] pair of 17-digit decimal strings.
OrderedJson complex_to_json(Complex z);

/// Accepts a number, a 17-digit decimal string, or an [re, im] pair of either.
Complex complex_from_json(const nlohmann::json& j);
double double_from_json(const nlohmann::json& j);

/// n x n complex matrix as nested [re, im] entries.
OrderedJson matrix_to_json(const CMatrix& m);
CMatrix matrix_from_json(const nlohmann::json& j);

/// FNV-1a 64-bit hash of a byte string, hex-encoded.
std::string fnv1a_hex(const std::string& bytes);

std::string read_file(const std::string& path);
void write_text(const std::string& path, const std::string& text);

/// Path file: {"n": int, "waypoints": [matrix, ...],
///             "samples_per_segment": int, "disc_floor": optional}.
GroupPath path_from_json(const nlohmann::json& j);
GroupPath load_path(const std::string& file);

}  // namespace isocycle
