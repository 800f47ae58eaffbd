#pragma once

#include <optional>
#include <string>

namespace geoevo {

// Canonical numeric string: at most 6 significant digits, "-0" folded to "0".
// All answers, ground truths and question givens go through this so string
// comparisons of regenerated data are stable.
std::string canonical_number(double v);

// |a - b| <= max(abs_tol, rel_tol * |b|); b is the reference value.
bool numeric_equal(double a, double b, double abs_tol = 1e-6,
                   double rel_tol = 1e-3);

// Parses a canonical numeric string (plain decimal, optional sign/exponent).
std::optional<double> parse_number(const std::string& s);

// Whitespace-delimited token count.
int token_count(const std::string& text);

}  // namespace geoevo
