#include "geoevo/reward.hpp"

#include <cctype>
#include <cmath>
#include <regex>

#include "geoevo/numeric.hpp"

namespace geoevo {

namespace {

bool whitespace_only(const std::string& s, size_t from, size_t to) {
  for (size_t i = from; i < to && i < s.size(); ++i)
    if (!std::isspace(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

size_t count_occurrences(const std::string& s, const std::string& needle) {
  size_t n = 0;
  for (size_t pos = s.find(needle); pos != std::string::npos;
       pos = s.find(needle, pos + needle.size()))
    ++n;
  return n;
}

// number (plain or scientific), optionally "a/b", optionally a degree marker
const std::regex kNumberPattern(
    R"(([+-]?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)(?:\s*/\s*([+-]?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?))?\s*(\xC2\xB0|degrees|degree|deg)?)");

const std::regex kStepPattern(R"(Step\s+(\d+)\s*:)");

}  // namespace

std::optional<std::string> extract_answer(const std::string& answer_text,
                                          std::string* unit_out) {
  std::optional<std::string> best;
  std::string best_unit;
  for (auto it = std::sregex_iterator(answer_text.begin(), answer_text.end(),
                                      kNumberPattern);
       it != std::sregex_iterator(); ++it) {
    const std::smatch& m = *it;
    double value = 0.0;
    try {
      value = std::stod(m[1].str());
      if (m[2].matched) {
        const double denom = std::stod(m[2].str());
        if (std::fabs(denom) < 1e-300) continue;  // a/0 is not an answer
        value /= denom;
      }
    } catch (const std::out_of_range&) {
      continue;  // overflowing literals like 9e999 are not answers
    }
    if (!std::isfinite(value)) continue;
    best = canonical_number(value);
    best_unit = m[3].matched ? "deg" : "";
  }
  if (unit_out) *unit_out = best_unit;
  return best;
}

std::optional<std::string> extract_answer(const std::string& answer_text) {
  return extract_answer(answer_text, nullptr);
}

ParsedResponse parse_response(const std::string& raw) {
  ParsedResponse out;

  const size_t think_open = raw.find("<think>");
  const size_t think_close = raw.find("</think>");
  const size_t answer_open = raw.find("<answer>");
  const size_t answer_close = raw.find("</answer>");
  if (think_open == std::string::npos || think_close == std::string::npos ||
      answer_open == std::string::npos || answer_close == std::string::npos)
    return out;
  if (count_occurrences(raw, "<think>") != 1 ||
      count_occurrences(raw, "</think>") != 1 ||
      count_occurrences(raw, "<answer>") != 1 ||
      count_occurrences(raw, "</answer>") != 1)
    return out;
  if (!(think_open < think_close && think_close < answer_open &&
        answer_open < answer_close))
    return out;
  if (!whitespace_only(raw, 0, think_open)) return out;
  if (!whitespace_only(raw, think_close + 8, answer_open)) return out;
  if (!whitespace_only(raw, answer_close + 9, raw.size())) return out;

  out.format_valid = true;
  out.think = raw.substr(think_open + 7, think_close - (think_open + 7));
  out.answer = raw.substr(answer_open + 8, answer_close - (answer_open + 8));

  std::string unit;
  out.extracted = extract_answer(*out.answer, &unit);
  if (!unit.empty()) out.unit = unit;

  for (auto it = std::sregex_iterator(out.think->begin(), out.think->end(),
                                      kStepPattern);
       it != std::sregex_iterator(); ++it)
    out.step_numbers.push_back(std::stoi((*it)[1].str()));
  return out;
}

RewardBreakdown score(const std::string& raw, const std::string& ground_truth,
                      const RewardConfig& cfg) {
  RewardBreakdown r;
  r.ground_truth = ground_truth;
  r.abs_tol = cfg.abs_tol;
  r.rel_tol = cfg.rel_tol;

  const ParsedResponse parsed = parse_response(raw);
  r.format = parsed.format_valid ? 1 : 0;

  if (parsed.extracted) {
    const auto got = parse_number(*parsed.extracted);
    const auto want = parse_number(ground_truth);
    if (got && want &&
        numeric_equal(*got, *want, cfg.abs_tol, cfg.rel_tol))
      r.accuracy = 1;
  }

  if (!parsed.step_numbers.empty()) {
    bool consecutive = true;
    for (size_t i = 0; i < parsed.step_numbers.size(); ++i)
      if (parsed.step_numbers[i] != static_cast<int>(i) + 1) consecutive = false;
    if (!consecutive) r.order_penalty = cfg.order_penalty;
  }

  r.total = cfg.accuracy_weight * r.accuracy + cfg.format_weight * r.format +
            r.order_penalty;
  return r;
}

std::string wrap_response(const std::string& think, const std::string& answer) {
  return "<think>" + think + "</think><answer>" + answer + "</answer>";
}

}  // namespace geoevo
