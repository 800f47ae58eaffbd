#include "geoevo/filter.hpp"

#include <algorithm>
#include <cmath>

namespace geoevo {

nlohmann::json ErrorRateEstimate::to_json() const {
  return {{"sample_id", sample_id}, {"k", k},
          {"wrong", wrong},         {"error_rate", error_rate},
          {"evaluated", evaluated}, {"model_tag", model_tag}};
}

nlohmann::json DifficultyHistogram::to_json() const {
  return {{"bin_edges", bin_edges},
          {"counts", counts},
          {"fully_correct", fully_correct},
          {"completely_wrong", completely_wrong},
          {"model_tag", model_tag},
          {"iteration", iteration}};
}

nlohmann::json FilterReport::to_json() const {
  return {{"threshold", threshold},     {"k", k},
          {"total", total},             {"retained", retained},
          {"unevaluated", unevaluated}, {"histogram", histogram.to_json()}};
}

namespace {

void validate(const SelectionPolicy& policy) {
  if (policy.threshold < 0.0 || policy.threshold > 1.0)
    throw std::invalid_argument("threshold must lie in [0,1]");
  if (policy.k_forwards < 1)
    throw std::invalid_argument("k_forwards must be >= 1");
}

}  // namespace

ErrorRateEstimate estimate_error_rate(const SampleRecord& sample,
                                      const SolverGateway& gateway,
                                      const SelectionPolicy& policy,
                                      const RewardConfig& reward_cfg) {
  validate(policy);
  ErrorRateEstimate est;
  est.sample_id = sample.id;
  est.model_tag = gateway.model_tag();

  try {
    for (int attempt = 0; attempt < policy.k_forwards; ++attempt) {
      const SolverResponse resp = gateway.answer(sample, attempt);
      const RewardBreakdown r =
          score(resp.raw, sample.ground_truth, reward_cfg);
      est.wrong += (r.accuracy == 0) ? 1 : 0;
      ++est.k;
      est.transcript_ids.push_back(sample.id + ":" +
                                   std::to_string(attempt));
    }
  } catch (const TransportError&) {
    // The gateway already exhausted its retries; K is incomplete, so the
    // sample stays unevaluated rather than getting a fabricated rate.
    est.evaluated = false;
    est.k = 0;
    est.wrong = 0;
    est.error_rate = 0.0;
    est.transcript_ids.clear();
    return est;
  }

  est.evaluated = true;
  est.error_rate =
      est.k > 0 ? static_cast<double>(est.wrong) / est.k : 0.0;
  return est;
}

std::pair<std::vector<std::string>, FilterReport> select_training_set(
    const std::vector<ErrorRateEstimate>& estimates,
    const SelectionPolicy& policy) {
  validate(policy);
  FilterReport report;
  report.threshold = policy.threshold;
  report.k = policy.k_forwards;
  report.total = static_cast<int>(estimates.size());
  report.histogram = difficulty_histogram(estimates);

  std::vector<std::string> retained;
  for (const auto& est : estimates) {
    if (!est.evaluated) {
      ++report.unevaluated;
      continue;
    }
    const bool keep = policy.inclusive ? est.error_rate >= policy.threshold
                                       : est.error_rate > policy.threshold;
    if (keep) retained.push_back(est.sample_id);
  }
  report.retained = static_cast<int>(retained.size());
  return {retained, report};
}

DifficultyHistogram difficulty_histogram(
    const std::vector<ErrorRateEstimate>& estimates) {
  DifficultyHistogram h;
  for (int i = 0; i <= 10; ++i) h.bin_edges.push_back(i / 10.0);
  h.counts.assign(11, 0);
  for (const auto& est : estimates) {
    if (!est.evaluated) continue;
    if (!est.model_tag.empty()) h.model_tag = est.model_tag;
    const double r = std::clamp(est.error_rate, 0.0, 1.0);
    const int bin = r >= 1.0 ? 10 : static_cast<int>(r * 10.0);
    ++h.counts[bin];
    if (r == 0.0) ++h.fully_correct;
    if (r == 1.0) ++h.completely_wrong;
  }
  return h;
}

}  // namespace geoevo
