#pragma once

#include <string>

#include <json.hpp>

#include "types.hpp"

namespace rblab {

// %.17g, the round-trip-exact decimal form used in every persisted artifact.
std::string format_g17(double v);

// Serializer for persisted JSON: sorted keys via nlohmann, doubles printed
// with %.17g so artifacts are byte-stable across runs.
std::string dump_json_g17(const nlohmann::json& j, int indent = 2);

void write_text_file(const std::string& file_path, const std::string& content);
std::string read_text_file(const std::string& file_path);

// SamplePath CSV: header "t,value", one row per grid point.
void write_path_csv(const SamplePath& path, const std::string& file_path);
SamplePath read_path_csv(const std::string& file_path);

} // namespace rblab
