#include "geoevo/numeric.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace geoevo {

std::string canonical_number(double v) {
  if (std::fabs(v) < 5e-13) v = 0.0;  // avoid "-0" and stray -1e-15 artifacts
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  std::string s(buf);
  if (s == "-0") s = "0";
  return s;
}

bool numeric_equal(double a, double b, double abs_tol, double rel_tol) {
  return std::fabs(a - b) <= std::max(abs_tol, rel_tol * std::fabs(b));
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin) return std::nullopt;
  while (*end != '\0') {
    if (!std::isspace(static_cast<unsigned char>(*end))) return std::nullopt;
    ++end;
  }
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

int token_count(const std::string& text) {
  std::istringstream in(text);
  std::string tok;
  int n = 0;
  while (in >> tok) ++n;
  return n;
}

}  // namespace geoevo
