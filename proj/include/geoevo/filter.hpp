#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "geoevo/reward.hpp"
#include "geoevo/solver.hpp"

namespace geoevo {

struct SelectionPolicy {
  double threshold = 0.3;  // tau
  bool inclusive = true;   // retain error rate >= tau (vs strictly >)
  int k_forwards = 32;
};

struct ErrorRateEstimate {
  std::string sample_id;
  int k = 0;      // scored forwards (transport failures never count)
  int wrong = 0;  // forwards whose accuracy reward was 0
  double error_rate = 0.0;
  std::vector<std::string> transcript_ids;
  bool evaluated = false;  // false: gateway aborted, sample unusable
  std::string model_tag;

  nlohmann::json to_json() const;
};

// 11 bins over error rate: [0,0.1), [0.1,0.2), ..., [0.9,1.0) and {1.0}.
// "Fully correct" (rate exactly 0) and "completely wrong" (exactly 1) are
// called out separately.
struct DifficultyHistogram {
  std::vector<double> bin_edges;  // 0, 0.1, ..., 1.0
  std::vector<int> counts;        // 11 bins
  int fully_correct = 0;
  int completely_wrong = 0;
  std::string model_tag;
  int iteration = 0;

  nlohmann::json to_json() const;
};

struct FilterReport {
  double threshold = 0.3;
  int k = 32;
  int total = 0;
  int retained = 0;
  int unevaluated = 0;
  DifficultyHistogram histogram;

  nlohmann::json to_json() const;
};

// Exactly policy.k_forwards scored forwards through the gateway; wrong =
// forwards whose accuracy reward is 0. A gateway abort marks the sample
// unevaluated instead of faking a rate.
ErrorRateEstimate estimate_error_rate(const SampleRecord& sample,
                                      const SolverGateway& gateway,
                                      const SelectionPolicy& policy,
                                      const RewardConfig& reward_cfg = {});

// Retained ids = {s : error_rate >= tau} (or > when not inclusive), in input
// order. Unevaluated estimates are never retained and are counted in the
// report.
std::pair<std::vector<std::string>, FilterReport> select_training_set(
    const std::vector<ErrorRateEstimate>& estimates,
    const SelectionPolicy& policy);

DifficultyHistogram difficulty_histogram(
    const std::vector<ErrorRateEstimate>& estimates);

}  // namespace geoevo
