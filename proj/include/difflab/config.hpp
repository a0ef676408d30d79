#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

namespace difflab {

// Flat key = value settings. '#' starts a comment; blank lines are skipped.
class Config {
 public:
  static Config parse(std::istream& in, const std::string& origin = "<config>");
  static Config load(const std::filesystem::path& path);

  // Later assignments win.
  void set(const std::string& key, const std::string& value);
  void merge(const Config& other);

  bool contains(const std::string& key) const { return values_.count(key) > 0; }
  const std::string& at(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

struct ParamSpec {
  std::string key;
  std::string default_value;
  std::string help;
};

// Fully resolved settings of one run, in declaration order.
class Params {
 public:
  Params(std::vector<ParamSpec> specs, const Config& given);

  const std::string& text(const std::string& key) const;
  double real(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  std::uint64_t seed() const;
  bool flag(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
  std::vector<std::size_t> counts(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

double parse_real(const std::string& key, const std::string& value);
std::uint64_t parse_unsigned(const std::string& key, const std::string& value);
std::vector<std::string> split_list(const std::string& value);

}  // namespace difflab
