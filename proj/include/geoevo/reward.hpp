#pragma once

#include <optional>
#include <string>
#include <vector>

namespace geoevo {

// One <think>...</think><answer>...</answer> response, decomposed. Fields are
// populated only when the whole template is well-formed: exactly one think
// block followed by exactly one answer block and nothing but whitespace
// outside them.
struct ParsedResponse {
  std::optional<std::string> think;
  std::optional<std::string> answer;
  std::optional<std::string> extracted;  // canonical numeric string
  std::optional<std::string> unit;       // "deg" when a degree suffix was seen
  std::vector<int> step_numbers;         // "Step k:" markers inside think
  bool format_valid = false;
};

struct RewardConfig {
  double accuracy_weight = 1.0;
  double format_weight = 1.0;
  double order_penalty = -0.5;
  double abs_tol = 1e-6;
  double rel_tol = 1e-3;
};

struct RewardBreakdown {
  int accuracy = 0;           // {0,1}
  int format = 0;             // {0,1}
  double order_penalty = 0.0; // {0, cfg.order_penalty}
  double total = 0.0;
  std::string ground_truth;
  double abs_tol = 1e-6;
  double rel_tol = 1e-3;
};

ParsedResponse parse_response(const std::string& raw);

// Last numeric mention in the text: signed decimal, integer or simple
// fraction a/b, optional degree suffix. Returns the canonical decimal string.
std::optional<std::string> extract_answer(const std::string& answer_text);
std::optional<std::string> extract_answer(const std::string& answer_text,
                                          std::string* unit_out);

// Rule-based reward: accuracy gated on a well-formed template, format
// adherence, and a penalty when step numbering is present but not 1,2,3,...
RewardBreakdown score(const std::string& raw, const std::string& ground_truth,
                      const RewardConfig& cfg = {});

// Helper for backends that must emit the expected template.
std::string wrap_response(const std::string& think, const std::string& answer);

}  // namespace geoevo
