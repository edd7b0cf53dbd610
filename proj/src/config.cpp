#include "dosepool/config.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "dosepool/error.hpp"

namespace dosepool {

nlohmann::json parse_toml(std::string_view text, std::string_view source) {
  toml::table table;
  try {
    table = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    const auto& where = e.source().begin;
    throw InputError(fmt::format("{}:{}:{}: {}", source, where.line, where.column, e.description()));
  }
  std::ostringstream os;
  os << toml::json_formatter{table};
  return nlohmann::json::parse(os.str());
}

nlohmann::json parse_json(std::string_view text, std::string_view source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(fmt::format("{}: {}", source, e.what()));
  }
}

nlohmann::json read_structured_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path));
  std::stringstream buf;
  buf << in.rdbuf();
  const bool is_json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  return is_json ? parse_json(buf.str(), path) : parse_toml(buf.str(), path);
}

}  // namespace dosepool
