#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "geoevo/geometry.hpp"

namespace geoevo {

class DatasetError : public std::runtime_error {
 public:
  explicit DatasetError(const std::string& what) : std::runtime_error(what) {}
};

// One dataset triplet: diagram + question + verified ground truth, plus the
// bookkeeping the loop needs (provenance, difficulty, filter status).
struct SampleRecord {
  std::string id;
  int iteration = 1;
  nlohmann::json diagram_spec;  // inline declarative diagram
  std::string svg_path;
  std::string question;
  std::string ground_truth;  // canonical numeric string
  std::string reasoning;     // "Step 1: ... Step 2: ..." trace
  std::vector<int> subproblem_ids;
  std::vector<std::string> principles;
  int aux_count = 0;
  int reasoning_tokens = 0;
  int difficulty = 0;  // aux-element count + chain length
  std::optional<double> error_rate;
  std::string error_rate_model;
  std::string status = "active";  // active | filtered-out | unevaluated
  std::string parent_id;

  nlohmann::json to_json() const;
  static SampleRecord from_json(const nlohmann::json& j);
  Diagram diagram() const;  // parsed from diagram_spec
};

std::vector<SampleRecord> read_jsonl(const std::string& path);

// Write-temp-then-rename; one UTF-8 JSON object per line.
void write_jsonl(const std::string& path,
                 const std::vector<SampleRecord>& records);

// Seeded base corpus: right triangles, scalene triangles, triangles with a
// tagged midpoint, rectangles and tangent-circle figures, each under a random
// rigid motion. Family 5 is a deliberately bare single-segment diagram for
// exercising the "too simple" path; make_seed_dataset cycles families 0-4.
Diagram make_seed_diagram(uint64_t seed, int family = -1);
SampleRecord make_seed_sample(int index, uint64_t seed);
std::vector<SampleRecord> make_seed_dataset(int count, uint64_t seed);

}  // namespace geoevo
