#pragma once

// Structured configuration files. TOML is converted to JSON so that one
// schema walker serves both formats.

#include <string>
#include <string_view>

#include <json.hpp>

namespace dosepool {

/// Parses TOML text into the equivalent JSON document (InputError on syntax errors).
nlohmann::json parse_toml(std::string_view text, std::string_view source = "<string>");
nlohmann::json parse_json(std::string_view text, std::string_view source = "<string>");

/// Reads a .toml or .json file, choosing the parser by extension.
nlohmann::json read_structured_file(const std::string& path);

}  // namespace dosepool
