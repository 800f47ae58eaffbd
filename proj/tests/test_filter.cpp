#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "geoevo/filter.hpp"
#include "geoevo/rng.hpp"

using namespace geoevo;

namespace {

SampleRecord make_sample(const std::string& id, int difficulty = 1) {
  SampleRecord s;
  s.id = id;
  s.question = "find AB";
  s.ground_truth = "5";
  s.reasoning = "Step 1: AB = 5.";
  s.difficulty = difficulty;
  return s;
}

ErrorRateEstimate fake_estimate(const std::string& id, double rate,
                                bool evaluated = true) {
  ErrorRateEstimate e;
  e.sample_id = id;
  e.k = 32;
  e.wrong = static_cast<int>(std::lround(rate * 32));
  e.error_rate = rate;
  e.evaluated = evaluated;
  e.model_tag = "sim-it1";
  return e;
}

}  // namespace

TEST_CASE("oracle backend yields error rate zero") {
  SolverConfig cfg;
  cfg.backend = SolverBackend::Oracle;
  SolverGateway gw(cfg);
  SelectionPolicy policy;
  const ErrorRateEstimate est =
      estimate_error_rate(make_sample("s1"), gw, policy);
  CHECK(est.evaluated);
  CHECK(est.k == 32);
  CHECK(est.wrong == 0);
  CHECK(est.error_rate == 0.0);
}

TEST_CASE("hopeless simulated solver yields error rate one") {
  SolverConfig cfg;
  cfg.backend = SolverBackend::Simulated;
  cfg.skill.base_success = 0.0;
  SolverGateway gw(cfg);
  SelectionPolicy policy;
  const ErrorRateEstimate est =
      estimate_error_rate(make_sample("s1"), gw, policy);
  CHECK(est.error_rate == 1.0);
  CHECK(est.wrong == 32);
}

TEST_CASE("estimates are deterministic and match a replayed draw chain") {
  SolverConfig cfg;
  cfg.backend = SolverBackend::Simulated;
  cfg.seed = 7;
  cfg.skill.base_success = 0.5;
  SelectionPolicy policy;
  const SampleRecord sample = make_sample("s7");

  SolverGateway gw1(cfg);
  const ErrorRateEstimate a = estimate_error_rate(sample, gw1, policy);
  SolverGateway gw2(cfg);
  const ErrorRateEstimate b = estimate_error_rate(sample, gw2, policy);
  CHECK(a.wrong == b.wrong);
  CHECK(a.error_rate == b.error_rate);
  CHECK(a.k == 32);
  CHECK(a.transcript_ids.size() == 32);

  // replay the documented (seed, sample, attempt) chain by hand
  int expected_wrong = 0;
  for (int attempt = 0; attempt < 32; ++attempt) {
    SplitMix64 rng(mix_seed(mix_seed(cfg.seed, hash64(sample.id)),
                            static_cast<uint64_t>(attempt)));
    if (!(rng.uniform() < 0.5)) ++expected_wrong;
  }
  CHECK(a.wrong == expected_wrong);
}

TEST_CASE("transport failure marks the sample unevaluated") {
  SolverConfig cfg;
  cfg.backend = SolverBackend::Http;
  cfg.api_base = "http://127.0.0.1:1";
  cfg.retry.max_attempts = 1;
  cfg.retry.initial_backoff_ms = 1;
  cfg.timeout_sec = 1;
  SolverGateway gw(cfg);
  SelectionPolicy policy;
  policy.k_forwards = 4;
  const ErrorRateEstimate est =
      estimate_error_rate(make_sample("s1"), gw, policy);
  CHECK(!est.evaluated);
  CHECK(est.k == 0);
}

TEST_CASE("selection honors the inclusive threshold") {
  SelectionPolicy policy;  // tau = 0.3, inclusive

  SUBCASE("all fully correct: empty retention") {
    const auto [ids, report] = select_training_set(
        {fake_estimate("a", 0.0), fake_estimate("b", 0.0)}, policy);
    CHECK(ids.empty());
    CHECK(report.retained == 0);
    CHECK(report.total == 2);
  }

  SUBCASE("boundary rate 0.3 is retained inclusively") {
    const auto [ids, report] = select_training_set(
        {fake_estimate("a", 0.0), fake_estimate("b", 0.3),
         fake_estimate("c", 0.9)},
        policy);
    CHECK(ids == std::vector<std::string>{"b", "c"});

    SelectionPolicy strict = policy;
    strict.inclusive = false;
    const auto [strict_ids, r2] = select_training_set(
        {fake_estimate("a", 0.0), fake_estimate("b", 0.3),
         fake_estimate("c", 0.9)},
        strict);
    CHECK(strict_ids == std::vector<std::string>{"c"});
  }

  SUBCASE("tau = 1.0 keeps only completely wrong samples") {
    SelectionPolicy top = policy;
    top.threshold = 1.0;
    const auto [ids, report] = select_training_set(
        {fake_estimate("a", 0.97), fake_estimate("b", 1.0)}, top);
    CHECK(ids == std::vector<std::string>{"b"});
  }

  SUBCASE("unevaluated samples are never retained") {
    const auto [ids, report] = select_training_set(
        {fake_estimate("a", 0.9, false), fake_estimate("b", 0.9)}, policy);
    CHECK(ids == std::vector<std::string>{"b"});
    CHECK(report.unevaluated == 1);
  }
}

TEST_CASE("raising the threshold never grows the retained set") {
  SplitMix64 rng(13);
  std::vector<ErrorRateEstimate> estimates;
  for (int i = 0; i < 60; ++i)
    estimates.push_back(fake_estimate("s" + std::to_string(i),
                                      rng.uniform_int(0, 32) / 32.0));
  size_t prev = estimates.size() + 1;
  for (double tau : {0.0, 0.1, 0.3, 0.6, 0.9, 1.0}) {
    SelectionPolicy policy;
    policy.threshold = tau;
    const auto [ids, report] = select_training_set(estimates, policy);
    CHECK(ids.size() <= prev);
    if (tau == 0.0) CHECK(ids.size() == estimates.size());
    prev = ids.size();
  }
}

TEST_CASE("histogram bins agree with naive rebinning") {
  SUBCASE("empty input") {
    const DifficultyHistogram h = difficulty_histogram({});
    CHECK(h.counts == std::vector<int>(11, 0));
    CHECK(h.fully_correct == 0);
    CHECK(h.completely_wrong == 0);
  }

  SUBCASE("a completely wrong sample lands in the last bin") {
    const DifficultyHistogram h =
        difficulty_histogram({fake_estimate("a", 1.0)});
    CHECK(h.counts[10] == 1);
    CHECK(h.completely_wrong == 1);
  }

  SUBCASE("100 seeded estimates") {
    SplitMix64 rng(29);
    std::vector<ErrorRateEstimate> estimates;
    for (int i = 0; i < 100; ++i)
      estimates.push_back(fake_estimate("s" + std::to_string(i),
                                        rng.uniform_int(0, 32) / 32.0));
    const DifficultyHistogram h = difficulty_histogram(estimates);

    std::vector<int> naive(11, 0);
    int zero = 0, one = 0;
    for (const auto& e : estimates) {
      naive[e.error_rate >= 1.0 ? 10 : static_cast<int>(e.error_rate * 10)]++;
      zero += e.error_rate == 0.0 ? 1 : 0;
      one += e.error_rate == 1.0 ? 1 : 0;
    }
    CHECK(h.counts == naive);
    CHECK(h.fully_correct == zero);
    CHECK(h.completely_wrong == one);
    int total = 0;
    for (int c : h.counts) total += c;
    CHECK(total == 100);
  }
}

TEST_CASE("estimator calibration against the known success probability") {
  SolverConfig cfg;
  cfg.backend = SolverBackend::Simulated;
  cfg.seed = 101;
  cfg.skill.base_success = 0.5;
  SolverGateway gw(cfg);
  SelectionPolicy policy;

  double sum = 0.0;
  const int n = 100;
  for (int i = 0; i < n; ++i) {
    const ErrorRateEstimate est =
        estimate_error_rate(make_sample("cal" + std::to_string(i)), gw,
                            policy);
    sum += est.error_rate;
  }
  const double mean = sum / n;
  // 99% binomial band around 0.5 with n*32 draws
  const double band = 2.5758 * std::sqrt(0.25 / (n * 32.0));
  CHECK(std::fabs(mean - 0.5) <= band);
}

TEST_CASE("filter discards mastered samples as skill grows") {
  SolverConfig cfg;
  cfg.backend = SolverBackend::Simulated;
  cfg.seed = 31;
  cfg.skill.base_success = 0.4;
  cfg.skill.iteration_gain = 0.2;
  cfg.skill.difficulty_slope = 0.05;
  cfg.skill_iteration = 2;
  SolverGateway gw(cfg);
  SelectionPolicy policy;

  std::vector<SampleRecord> samples;
  for (int i = 0; i < 60; ++i)
    samples.push_back(make_sample("d" + std::to_string(i), 1 + i % 8));

  std::vector<ErrorRateEstimate> estimates;
  double retained_difficulty = 0.0, mastered_difficulty = 0.0;
  int retained_n = 0, mastered_n = 0;
  for (const auto& s : samples) {
    const ErrorRateEstimate est = estimate_error_rate(s, gw, policy);
    estimates.push_back(est);
    if (est.error_rate >= policy.threshold) {
      retained_difficulty += s.difficulty;
      ++retained_n;
    } else {
      mastered_difficulty += s.difficulty;
      ++mastered_n;
    }
  }
  REQUIRE(retained_n > 0);
  REQUIRE(mastered_n > 0);
  CHECK(retained_difficulty / retained_n >=
        mastered_difficulty / mastered_n);

  // exclusion soundness: nothing below the threshold is in the retained set
  const auto [ids, report] = select_training_set(estimates, policy);
  for (const auto& id : ids) {
    const auto it =
        std::find_if(estimates.begin(), estimates.end(),
                     [&](const ErrorRateEstimate& e) {
                       return e.sample_id == id;
                     });
    REQUIRE(it != estimates.end());
    CHECK(it->error_rate >= policy.threshold);
  }
}

TEST_CASE("filter report serializes the external interface fields") {
  const auto [ids, report] = select_training_set(
      {fake_estimate("a", 0.5), fake_estimate("b", 0.1),
       fake_estimate("c", 0.0, false)},
      SelectionPolicy{});
  const nlohmann::json j = report.to_json();
  CHECK(j.at("threshold").get<double>() == doctest::Approx(0.3));
  CHECK(j.at("k").get<int>() == 32);
  CHECK(j.at("total").get<int>() == 3);
  CHECK(j.at("retained").get<int>() == 1);
  CHECK(j.at("unevaluated").get<int>() == 1);
  CHECK(j.contains("histogram"));
  CHECK(j["histogram"].at("counts").size() == 11);
}
