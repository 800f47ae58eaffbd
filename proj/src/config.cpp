#include "geoevo/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace geoevo {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Strips a trailing comment that is not inside a string literal.
std::string strip_comment(const std::string& s) {
  bool in_string = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_string = !in_string;
    if (s[i] == '#' && !in_string) return s.substr(0, i);
  }
  return s;
}

TomlValue parse_scalar(const std::string& raw, const std::string& where) {
  const std::string v = trim(raw);
  if (v.empty()) throw ConfigError(where + ": empty value");
  if (v == "true") return true;
  if (v == "false") return false;
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"')
      throw ConfigError(where + ": unterminated string");
    return v.substr(1, v.size() - 2);
  }
  try {
    size_t consumed = 0;
    const double num = std::stod(v, &consumed);
    if (consumed == v.size() && std::isfinite(num)) return num;
  } catch (const std::exception&) {
  }
  throw ConfigError(where + ": cannot parse value '" + v + "'");
}

TomlValue parse_value(const std::string& raw, const std::string& where) {
  const std::string v = trim(raw);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') throw ConfigError(where + ": unterminated array");
    std::vector<std::string> strings;
    std::vector<double> numbers;
    bool saw_string = false, saw_number = false;
    std::string body = v.substr(1, v.size() - 2);
    std::string item;
    bool in_string = false;
    auto flush = [&]() {
      const std::string t = trim(item);
      item.clear();
      if (t.empty()) return;
      const TomlValue sv = parse_scalar(t, where);
      if (std::holds_alternative<std::string>(sv)) {
        saw_string = true;
        strings.push_back(std::get<std::string>(sv));
      } else if (std::holds_alternative<double>(sv)) {
        saw_number = true;
        numbers.push_back(std::get<double>(sv));
      } else {
        throw ConfigError(where + ": unsupported array element");
      }
    };
    for (char c : body) {
      if (c == '"') in_string = !in_string;
      if (c == ',' && !in_string) {
        flush();
        continue;
      }
      item += c;
    }
    flush();
    if (saw_string && saw_number)
      throw ConfigError(where + ": mixed array element types");
    if (saw_string) return strings;
    return numbers;  // empty arrays parse as empty number arrays
  }
  return parse_scalar(v, where);
}

}  // namespace

TomlTable TomlTable::parse(const std::string& text, const std::string& origin) {
  TomlTable table;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    const std::string stripped = trim(strip_comment(line));
    if (stripped.empty()) continue;
    if (stripped.front() == '[') {
      if (stripped.back() != ']')
        throw ConfigError(where + ": malformed section header");
      section = trim(stripped.substr(1, stripped.size() - 2));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      table.sections_[section];
      continue;
    }
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    table.sections_[section][key] =
        parse_value(stripped.substr(eq + 1), where);
  }
  return table;
}

TomlTable TomlTable::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

bool TomlTable::has(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string TomlTable::get_string(const std::string& section,
                                  const std::string& key,
                                  const std::string& fallback) const {
  if (!has(section, key)) return fallback;
  const TomlValue& v = sections_.at(section).at(key);
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  throw ConfigError("[" + section + "] " + key + " must be a string");
}

double TomlTable::get_number(const std::string& section,
                             const std::string& key, double fallback) const {
  if (!has(section, key)) return fallback;
  const TomlValue& v = sections_.at(section).at(key);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  throw ConfigError("[" + section + "] " + key + " must be a number");
}

int TomlTable::get_int(const std::string& section, const std::string& key,
                       int fallback) const {
  const double d = get_number(section, key, fallback);
  const int i = static_cast<int>(std::llround(d));
  if (std::fabs(d - i) > 1e-9)
    throw ConfigError("[" + section + "] " + key + " must be an integer");
  return i;
}

bool TomlTable::get_bool(const std::string& section, const std::string& key,
                         bool fallback) const {
  if (!has(section, key)) return fallback;
  const TomlValue& v = sections_.at(section).at(key);
  if (const auto* b = std::get_if<bool>(&v)) return *b;
  throw ConfigError("[" + section + "] " + key + " must be a boolean");
}

std::vector<std::string> TomlTable::get_string_array(
    const std::string& section, const std::string& key,
    const std::vector<std::string>& fallback) const {
  if (!has(section, key)) return fallback;
  const TomlValue& v = sections_.at(section).at(key);
  if (const auto* a = std::get_if<std::vector<std::string>>(&v)) return *a;
  if (const auto* n = std::get_if<std::vector<double>>(&v); n && n->empty())
    return {};
  throw ConfigError("[" + section + "] " + key + " must be a string array");
}

std::vector<double> TomlTable::get_number_array(
    const std::string& section, const std::string& key,
    const std::vector<double>& fallback) const {
  if (!has(section, key)) return fallback;
  const TomlValue& v = sections_.at(section).at(key);
  if (const auto* a = std::get_if<std::vector<double>>(&v)) return *a;
  throw ConfigError("[" + section + "] " + key + " must be a number array");
}

}  // namespace geoevo
