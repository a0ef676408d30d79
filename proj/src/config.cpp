#include "difflab/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "difflab/error.hpp"

namespace difflab {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse(std::istream& in, const std::string& origin) {
  Config c;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos,
            origin + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    require(!key.empty(), origin + ":" + std::to_string(lineno) + ": empty key");
    c.set(key, trim(line.substr(eq + 1)));
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open config " + path.string());
  return parse(in, path.string());
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }

void Config::merge(const Config& other) {
  for (const auto& [k, v] : other.values_) values_[k] = v;
}

const std::string& Config::at(const std::string& key) const {
  const auto it = values_.find(key);
  require(it != values_.end(), "missing key '" + key + "'");
  return it->second;
}

Params::Params(std::vector<ParamSpec> specs, const Config& given) {
  for (const auto& [key, value] : given.values()) {
    bool known = false;
    for (const auto& s : specs) known = known || s.key == key;
    require(known, "unknown key '" + key + "'");
  }
  for (const auto& s : specs)
    entries_.emplace_back(s.key, given.contains(s.key) ? given.at(s.key) : s.default_value);
}

const std::string& Params::text(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  throw std::logic_error("parameter '" + key + "' not declared");
}

double Params::real(const std::string& key) const { return parse_real(key, text(key)); }

std::size_t Params::count(const std::string& key) const {
  return static_cast<std::size_t>(parse_unsigned(key, text(key)));
}

std::uint64_t Params::seed() const { return parse_unsigned("seed", text("seed")); }

bool Params::flag(const std::string& key) const {
  const std::string& v = text(key);
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw std::invalid_argument("key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<double> Params::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(text(key))) out.push_back(parse_real(key, item));
  return out;
}

std::vector<std::size_t> Params::counts(const std::string& key) const {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(text(key)))
    out.push_back(static_cast<std::size_t>(parse_unsigned(key, item)));
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  require(ec == std::errc() && ptr == end && !value.empty(),
          "key '" + key + "': expected a number, got '" + value + "'");
  return v;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  require(ec == std::errc() && ptr == end && !value.empty(),
          "key '" + key + "': expected a non-negative integer, got '" + value + "'");
  return v;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  if (trim(value).empty()) return out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

}  // namespace difflab
