#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "geoevo/grpo.hpp"

using namespace geoevo;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// One rollout whose current/old log-probs are pinned by hand.
RolloutGroup pinned_group(std::initializer_list<std::pair<double, double>>
                              current_old_pairs) {
  RolloutGroup g;
  g.question = "pinned";
  for (const auto& [current, old] : current_old_pairs) {
    Rollout r;
    r.tokens = {0};
    r.logp_current = current;
    r.logp_old = old;
    g.rollouts.push_back(r);
  }
  return g;
}

RolloutGroup random_group(const ToyPolicy& policy, const std::string& question,
                          int n, int len, uint64_t seed, double ratio_noise) {
  SplitMix64 rng(seed);
  RolloutGroup g;
  g.question = question;
  for (int i = 0; i < n; ++i) {
    Rollout r;
    for (int k = 0; k < len; ++k)
      r.tokens.push_back(rng.uniform_int(0, policy.vocab_size() - 1));
    r.logp_current = policy.sequence_logprob(question, r.tokens);
    // keep the ratio strictly inside the clip range
    r.logp_old = r.logp_current + rng.uniform(-ratio_noise, ratio_noise);
    r.reward = rng.uniform(0.0, 2.0);
    g.rollouts.push_back(std::move(r));
  }
  return g;
}

}  // namespace

TEST_CASE("group advantages: zero variance, hand value, degenerate group") {
  CHECK(compute_group_advantages(vec({1, 1, 1, 1})).isZero(0.0));

  const Eigen::VectorXd a = compute_group_advantages(vec({0, 1, 1, 2}));
  CHECK(a(0) == doctest::Approx(-1.414214).epsilon(1e-6));
  CHECK(a(1) == doctest::Approx(0.0));
  CHECK(a(2) == doctest::Approx(0.0));
  CHECK(a(3) == doctest::Approx(1.414214).epsilon(1e-6));

  CHECK(compute_group_advantages(vec({5.0})).isZero(0.0));
  CHECK_THROWS_AS(compute_group_advantages(Eigen::VectorXd()), GrpoError);
}

TEST_CASE("advantage normalization and affine invariance") {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.uniform_int(2, 16);
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) r(i) = rng.uniform(-5.0, 5.0);
    const Eigen::VectorXd a = compute_group_advantages(r);

    CHECK(std::fabs(a.mean()) < 1e-9);
    const double std_r = std::sqrt((r.array() - r.mean()).square().mean());
    if (std_r > 1e-8) {
      const double std_a = std::sqrt((a.array() - a.mean()).square().mean());
      CHECK(std_a == doctest::Approx(1.0).epsilon(1e-6));
    }

    const double scale = rng.uniform(0.1, 3.0);
    const double shift = rng.uniform(-10.0, 10.0);
    const Eigen::VectorXd b =
        compute_group_advantages((scale * r.array() + shift).matrix());
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("grpo loss reproduces the hand-derived clip values") {
  GrpoHyperparams hp;  // epsilon 0.2, beta 0

  SUBCASE("identity ratios and mean-zero advantages give zero loss") {
    RolloutGroup g = pinned_group({{-1.0, -1.0}, {-2.0, -2.0},
                                   {-3.0, -3.0}, {-4.0, -4.0}});
    const Eigen::VectorXd adv = compute_group_advantages(vec({0, 1, 1, 2}));
    CHECK(std::fabs(grpo_loss(g, adv, hp, Eigen::VectorXd())) < 1e-12);
  }

  SUBCASE("rho 1.5 with positive advantage clips to -1.2") {
    RolloutGroup g = pinned_group({{std::log(1.5), 0.0}});
    CHECK(grpo_loss(g, vec({1.0}), hp, Eigen::VectorXd()) ==
          doctest::Approx(-1.2).epsilon(1e-12));
  }

  SUBCASE("rho 0.5 with negative advantage clips to +0.8") {
    RolloutGroup g = pinned_group({{std::log(0.5), 0.0}});
    CHECK(grpo_loss(g, vec({-1.0}), hp, Eigen::VectorXd()) ==
          doctest::Approx(0.8).epsilon(1e-12));
  }

  SUBCASE("non-finite log-probs are rejected") {
    RolloutGroup g = pinned_group({{std::nan(""), 0.0}});
    CHECK_THROWS_AS(grpo_loss(g, vec({1.0}), hp, Eigen::VectorXd()),
                    GrpoError);
  }
}

TEST_CASE("clip bound: the surrogate never exceeds (1+eps)|A|") {
  SplitMix64 rng(17);
  GrpoHyperparams hp;
  for (int trial = 0; trial < 200; ++trial) {
    const double logp_current = rng.uniform(-3.0, 0.0);
    const double logp_old = rng.uniform(-3.0, 0.0);
    const double advantage = rng.uniform(-2.0, 2.0);
    RolloutGroup g = pinned_group({{logp_current, logp_old}});
    const GrpoLossTerms terms =
        grpo_loss_terms(g, vec({advantage}), hp, Eigen::VectorXd());
    CHECK(terms.surrogate <=
          (1.0 + hp.clip_epsilon) * std::fabs(advantage) + 1e-12);
  }
}

TEST_CASE("sft loss on the uniform policy is ln V per token") {
  const ToyPolicy policy = ToyPolicy::uniform();
  const double expect = std::log(static_cast<double>(policy.vocab_size()));
  const std::vector<int> tokens = {0, 3, 7, 1};
  CHECK(std::fabs(sft_loss(policy, "any question", tokens) - expect) < 1e-12);
}

TEST_CASE("sft loss averages the per-token losses") {
  ToyPolicyConfig cfg;
  cfg.seed = 4;
  const ToyPolicy policy = ToyPolicy::seeded(cfg);
  const std::string q = "two tokens";
  const std::vector<int> tokens = {2, 9};
  const double l0 = -policy.log_probs(q, 0)(2);
  const double l1 = -policy.log_probs(q, 1)(9);
  CHECK(sft_loss(policy, q, tokens) ==
        doctest::Approx(0.5 * (l0 + l1)).epsilon(1e-12));
}

TEST_CASE("sft loss approaches zero for a policy trained to certainty") {
  ToyPolicyConfig cfg;
  cfg.seed = 8;
  ToyPolicy policy = ToyPolicy::seeded(cfg);
  const std::string q = "memorize me";
  const std::vector<int> tokens = {1, 2, 3};
  for (int step = 0; step < 400; ++step)
    sft_train_step(policy, {{q, tokens}}, 2.0, step);
  CHECK(sft_loss(policy, q, tokens) < 0.05);
}

TEST_CASE("softmax normalizes within 1e-12 at every position") {
  ToyPolicyConfig cfg;
  cfg.seed = 6;
  const ToyPolicy policy = ToyPolicy::seeded(cfg);
  for (int pos = 0; pos < 8; ++pos) {
    const double total =
        policy.log_probs("normalization", pos).array().exp().sum();
    CHECK(std::fabs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("out-of-vocabulary tokens are rejected") {
  const ToyPolicy policy = ToyPolicy::uniform();
  CHECK_THROWS_AS(policy.encode("xyz"), GrpoError);
  CHECK_THROWS_AS(sft_loss(policy, "q", {999}), GrpoError);
  CHECK(policy.decode(policy.encode("12.5")) == "12.5");
}

TEST_CASE("sft gradients agree with central finite differences") {
  SplitMix64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    ToyPolicyConfig cfg;
    cfg.vocab = {"0", "1", "2", "3", "4", "5"};
    cfg.feature_dim = 5;
    cfg.seed = rng.next();
    const ToyPolicy policy = ToyPolicy::seeded(cfg);
    std::vector<int> tokens;
    for (int k = 0; k < 4; ++k) tokens.push_back(rng.uniform_int(0, 5));
    const GradientReport report = verify_sft_gradients(
        policy, "gradcheck " + std::to_string(trial), tokens);
    CHECK(report.max_rel_discrepancy < 1e-5);
  }
}

TEST_CASE("grpo gradients agree with finite differences, with and without KL") {
  SplitMix64 rng(22);
  for (double beta : {0.0, 0.1}) {
    for (int trial = 0; trial < 5; ++trial) {
      ToyPolicyConfig cfg;
      cfg.vocab = {"0", "1", "2", "3", "4", "5", "6", "7"};
      cfg.feature_dim = 6;
      cfg.seed = rng.next();
      const ToyPolicy policy = ToyPolicy::seeded(cfg);
      const RolloutGroup group = random_group(
          policy, "grpo gradcheck " + std::to_string(trial), 4, 3,
          rng.next(), 0.05);
      Eigen::VectorXd ref_logps(group.size());
      for (int i = 0; i < group.size(); ++i)
        ref_logps(i) = group.rollouts[i].logp_current + 0.03;

      GrpoHyperparams hp;
      hp.kl_beta = beta;
      const GradientReport report =
          verify_grpo_gradients(policy, group, hp, ref_logps);
      CHECK(!report.at_clip_kink);
      CHECK(report.max_rel_discrepancy < 1e-5);
    }
  }
}

TEST_CASE("ratios at the clip boundary are flagged as kinks") {
  ToyPolicyConfig cfg;
  cfg.seed = 12;
  const ToyPolicy policy = ToyPolicy::seeded(cfg);
  RolloutGroup g;
  g.question = "kink";
  Rollout r;
  r.tokens = {0, 1};
  r.reward = 1.0;
  const double logp = policy.sequence_logprob(g.question, r.tokens);
  r.logp_current = logp;
  r.logp_old = logp - std::log(1.2);  // rho lands exactly on 1 + eps
  g.rollouts.push_back(r);
  Rollout other = r;
  other.reward = 0.0;
  other.logp_old = r.logp_current;
  g.rollouts.push_back(other);

  GrpoHyperparams hp;
  const GradientReport report =
      verify_grpo_gradients(policy, g, hp, Eigen::VectorXd());
  CHECK(report.at_clip_kink);
}

TEST_CASE("train step: zero advantages leave parameters untouched") {
  ToyPolicyConfig cfg;
  cfg.seed = 31;
  ToyPolicy policy = ToyPolicy::seeded(cfg);
  const Eigen::MatrixXd before = policy.theta();

  RolloutGroup g;
  g.question = "flat";
  for (int i = 0; i < 4; ++i) {
    Rollout r;
    r.tokens = {i, i};
    r.reward = 1.0;  // identical rewards, zero variance
    r.logp_old = policy.sequence_logprob(g.question, r.tokens);
    r.logp_current = r.logp_old;
    g.rollouts.push_back(r);
  }
  GrpoHyperparams hp;
  grpo_train_step(policy, {g}, hp, 0);
  CHECK((policy.theta() - before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("train step: positive advantage raises the rollout's log-prob") {
  ToyPolicyConfig cfg;
  cfg.seed = 32;
  ToyPolicy policy = ToyPolicy::seeded(cfg);
  const std::string q = "improve me";

  RolloutGroup g;
  g.question = q;
  Rollout good;
  good.tokens = {1, 2, 3};
  good.reward = 1.0;
  good.logp_old = policy.sequence_logprob(q, good.tokens);
  good.logp_current = good.logp_old;
  Rollout bad;
  bad.tokens = {4, 5, 6};
  bad.reward = 0.0;
  bad.logp_old = policy.sequence_logprob(q, bad.tokens);
  bad.logp_current = bad.logp_old;
  g.rollouts = {good, bad};

  const double before = policy.sequence_logprob(q, good.tokens);
  GrpoHyperparams hp;
  hp.learning_rate = 0.01;
  grpo_train_step(policy, {g}, hp, 0);
  const double after = policy.sequence_logprob(q, good.tokens);
  CHECK(after > before);
}

TEST_CASE("train step metrics are bit-identical across reruns") {
  auto run = [] {
    ToyPolicyConfig cfg;
    cfg.seed = 33;
    ToyPolicy policy = ToyPolicy::seeded(cfg);
    std::vector<TrainMetrics> all;
    for (int step = 0; step < 5; ++step) {
      const RolloutGroup g = sample_rollout_group(
          policy, "determinism", 8, 3, mix_seed(99, step),
          [](const std::string& s) {
            return static_cast<double>(s.size() % 3);
          });
      all.push_back(grpo_train_step(policy, {g}, GrpoHyperparams{}, step));
    }
    return std::pair(all, policy.to_json().dump());
  };
  const auto [metrics_a, theta_a] = run();
  const auto [metrics_b, theta_b] = run();
  CHECK(theta_a == theta_b);
  for (size_t i = 0; i < metrics_a.size(); ++i) {
    CHECK(metrics_a[i].mean_reward == metrics_b[i].mean_reward);
    CHECK(metrics_a[i].loss == metrics_b[i].loss);
    CHECK(metrics_a[i].clip_fraction == metrics_b[i].clip_fraction);
  }
}

TEST_CASE("policy serialization round-trips bitwise") {
  ToyPolicyConfig cfg;
  cfg.seed = 41;
  const ToyPolicy policy = ToyPolicy::seeded(cfg);
  const ToyPolicy copy = ToyPolicy::from_json(policy.to_json());
  CHECK(copy.theta() == policy.theta());
  CHECK(copy.vocab() == policy.vocab());
}

TEST_CASE("group size schedule starts at 32 and drops to 8") {
  const GrpoHyperparams hp;
  CHECK(hp.group_size_for(1) == 32);
  CHECK(hp.group_size_for(2) == 8);
  CHECK(hp.group_size_for(5) == 8);
}

TEST_CASE("grpo demo task improves under training") {
  ToyPolicyConfig cfg;
  cfg.seed = 55;
  ToyPolicy policy = ToyPolicy::seeded(cfg);
  const std::string q = "demo";
  const std::string target = "42";
  auto reward_fn = [&target](const std::string& s) {
    double match = 0.0;
    for (size_t i = 0; i < s.size() && i < target.size(); ++i)
      match += s[i] == target[i] ? 1.0 : 0.0;
    return match / target.size();
  };
  GrpoHyperparams hp;
  hp.learning_rate = 0.5;
  double first = 0.0, last = 0.0;
  for (int step = 0; step < 40; ++step) {
    const RolloutGroup g = sample_rollout_group(policy, q, 16, 2,
                                                mix_seed(7, step), reward_fn);
    const TrainMetrics m = grpo_train_step(policy, {g}, hp, step);
    if (step == 0) first = m.mean_reward;
    last = m.mean_reward;
  }
  CHECK(last > first + 0.2);  // clear improvement, not noise
}
