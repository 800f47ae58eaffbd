#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace geoevo {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Value subset sufficient for the run configuration: scalars and flat arrays.
using TomlValue = std::variant<bool, double, std::string,
                               std::vector<std::string>, std::vector<double>>;

// Flat tables only: top-level keys live in the "" section.
class TomlTable {
 public:
  static TomlTable parse_file(const std::string& path);
  static TomlTable parse(const std::string& text, const std::string& origin);

  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_number(const std::string& section, const std::string& key,
                    double fallback) const;
  int get_int(const std::string& section, const std::string& key,
              int fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  std::vector<std::string> get_string_array(
      const std::string& section, const std::string& key,
      const std::vector<std::string>& fallback) const;
  std::vector<double> get_number_array(
      const std::string& section, const std::string& key,
      const std::vector<double>& fallback) const;

 private:
  std::map<std::string, std::map<std::string, TomlValue>> sections_;
};

}  // namespace geoevo
