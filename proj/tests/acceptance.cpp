// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Expected values are frozen from hand derivations and the
// independent re-evaluators below; tolerances are pinned in the assertions.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

#include "geoevo/filter.hpp"
#include "geoevo/grpo.hpp"
#include "geoevo/numeric.hpp"
#include "geoevo/orchestrator.hpp"
#include "geoevo/reward.hpp"
#include "geoevo/rng.hpp"
#include "geoevo/svg.hpp"

using namespace geoevo;
namespace fs = std::filesystem;

namespace {

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw CheckFailure(what);
}

void require_close(double got, double want, double tol,
                   const std::string& what) {
  if (!(std::fabs(got - want) <= tol)) {
    std::ostringstream msg;
    msg << what << ": got " << got << ", want " << want << " +/- " << tol;
    throw CheckFailure(msg.str());
  }
}

// Independent quantity evaluation from raw coordinates with plain libm; no
// shared code with the kernel's measure().
double independent_eval(const Diagram& d, const std::string& key) {
  std::vector<std::string> parts;
  std::stringstream ss(key);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  auto P = [&](const std::string& label) {
    const Point* p = d.find_point(label);
    require(p != nullptr, "unknown label " + label);
    return std::pair<double, double>{p->pos.x(), p->pos.y()};
  };
  const std::string& kind = parts[0];
  if (kind == "dist") {
    auto [ax, ay] = P(parts[1]);
    auto [bx, by] = P(parts[2]);
    return std::hypot(ax - bx, ay - by);
  }
  if (kind == "angle" || kind == "arc") {
    const bool arc = kind == "arc";
    auto [vx, vy] = P(parts[arc ? 1 : 2]);
    auto [ax, ay] = P(parts[arc ? 2 : 1]);
    auto [cx, cy] = P(parts[3]);
    const double ux = ax - vx, uy = ay - vy, wx = cx - vx, wy = cy - vy;
    const double c =
        (ux * wx + uy * wy) / (std::hypot(ux, uy) * std::hypot(wx, wy));
    const double rad = std::acos(std::min(1.0, std::max(-1.0, c)));
    if (!arc) return rad * 180.0 / M_PI;
    const Primitive* circle = d.find_circle(parts[1]);
    require(circle != nullptr, "no circle for arc key");
    return circle->radius * rad;
  }
  if (kind == "area" || kind == "perim") {
    double twice = 0.0, sum = 0.0;
    for (size_t i = 1; i < parts.size(); ++i) {
      auto [x1, y1] = P(parts[i]);
      auto [x2, y2] = P(parts[i + 1 < parts.size() ? i + 1 : 1]);
      twice += x1 * y2 - x2 * y1;
      sum += std::hypot(x1 - x2, y1 - y2);
    }
    return kind == "area" ? std::fabs(twice) / 2.0 : sum;
  }
  if (kind == "rad") {
    const Primitive* c = d.find_circle(parts[1]);
    require(c != nullptr, "no circle for rad key");
    return c->radius;
  }
  if (kind == "linedist") {
    auto [px, py] = P(parts[1]);
    auto [ax, ay] = P(parts[2]);
    auto [bx, by] = P(parts[3]);
    const double abx = bx - ax, aby = by - ay;
    return std::fabs(abx * (py - ay) - aby * (px - ax)) / std::hypot(abx, aby);
  }
  if (kind == "dirangle") {
    auto [ax, ay] = P(parts[1]);
    auto [bx, by] = P(parts[2]);
    auto [cx, cy] = P(parts[3]);
    auto [dx, dy] = P(parts[4]);
    const double ux = bx - ax, uy = by - ay, wx = dx - cx, wy = dy - cy;
    const double c = std::fabs(ux * wx + uy * wy) /
                     (std::hypot(ux, uy) * std::hypot(wx, wy));
    return std::acos(std::min(1.0, c)) * 180.0 / M_PI;
  }
  throw CheckFailure("unknown key " + key);
}

RolloutGroup interior_group(const ToyPolicy& policy, const std::string& q,
                            int n, int len, SplitMix64& rng) {
  RolloutGroup g;
  g.question = q;
  for (int i = 0; i < n; ++i) {
    Rollout r;
    for (int k = 0; k < len; ++k)
      r.tokens.push_back(rng.uniform_int(0, policy.vocab_size() - 1));
    r.logp_current = policy.sequence_logprob(q, r.tokens);
    r.logp_old = r.logp_current + rng.uniform(-0.05, 0.05);
    r.reward = rng.uniform(0.0, 2.0);
    g.rollouts.push_back(std::move(r));
  }
  return g;
}

// --- criteria ---

void criterion_grpo_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  SplitMix64 rng(1001);
  int checked = 0;
  for (double beta : {0.0, 0.1}) {
    for (int trial = 0; trial < 12; ++trial) {
      ToyPolicyConfig cfg;
      cfg.vocab = {"0", "1", "2", "3", "4", "5", "6", "7"};
      cfg.feature_dim = 6;
      cfg.seed = rng.next();
      const ToyPolicy policy = ToyPolicy::seeded(cfg);
      const RolloutGroup group = interior_group(
          policy, "acceptance-grpo-" + std::to_string(trial), 4, 3, rng);
      Eigen::VectorXd ref_logps(group.size());
      for (int i = 0; i < group.size(); ++i)
        ref_logps(i) = group.rollouts[i].logp_current + 0.03;

      GrpoHyperparams hp;
      hp.kl_beta = beta;
      const GradientReport report =
          verify_grpo_gradients(policy, group, hp, ref_logps);
      if (report.at_clip_kink) continue;  // excluded by protocol
      require(report.max_rel_discrepancy < 1e-5,
              "gradient mismatch " +
                  std::to_string(report.max_rel_discrepancy) + " at beta " +
                  std::to_string(beta));
      ++checked;
    }
  }
  require(checked >= 20, "only " + std::to_string(checked) + " instances");
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
  require(secs < 10.0, "too slow: " + std::to_string(secs) + " s");
}

void criterion_sft_gradients() {
  SplitMix64 rng(1002);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    ToyPolicyConfig cfg;
    cfg.vocab = {"0", "1", "2", "3", "4", "5"};
    cfg.feature_dim = 5;
    cfg.seed = rng.next();
    const ToyPolicy policy = ToyPolicy::seeded(cfg);
    std::vector<int> tokens;
    for (int k = 0; k < 4; ++k) tokens.push_back(rng.uniform_int(0, 5));
    const GradientReport report = verify_sft_gradients(
        policy, "acceptance-sft-" + std::to_string(trial), tokens);
    require(report.max_rel_discrepancy < 1e-5,
            "gradient mismatch " +
                std::to_string(report.max_rel_discrepancy));
    ++checked;
  }
  require(checked >= 20, "too few instances");

  const ToyPolicy uniform = ToyPolicy::uniform();
  const double loss = sft_loss(uniform, "uniform question", {0, 1, 2});
  require_close(loss, std::log(double(uniform.vocab_size())), 1e-12,
                "uniform-policy loss");
}

void criterion_advantage_laws() {
  SplitMix64 rng(1003);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = rng.uniform_int(2, 32);
    Eigen::VectorXd rewards(n);
    for (int i = 0; i < n; ++i) rewards(i) = rng.uniform(-5.0, 5.0);
    const Eigen::VectorXd a = compute_group_advantages(rewards);

    require(std::fabs(a.mean()) <= 1e-9, "advantage mean off");
    const double std_r =
        std::sqrt((rewards.array() - rewards.mean()).square().mean());
    if (std_r > 1e-8) {
      const double std_a = std::sqrt((a.array() - a.mean()).square().mean());
      require(std::fabs(std_a - 1.0) <= 1e-6, "advantage std off");
    }

    const double scale = rng.uniform(0.1, 4.0);
    const double shift = rng.uniform(-8.0, 8.0);
    const Eigen::VectorXd b =
        compute_group_advantages((scale * rewards.array() + shift).matrix());
    require((a - b).cwiseAbs().maxCoeff() <= 1e-12,
            "affine transform changed advantages");
  }
}

void criterion_clip_behavior() {
  GrpoHyperparams hp;  // eps 0.2, beta 0
  {
    RolloutGroup g;
    g.question = "clip";
    for (double lp : {-1.0, -2.0, -3.0, -4.0}) {
      Rollout r;
      r.tokens = {0};
      r.logp_current = lp;
      r.logp_old = lp;
      g.rollouts.push_back(r);
    }
    const Eigen::VectorXd adv = compute_group_advantages(
        (Eigen::VectorXd(4) << 0, 1, 1, 2).finished());
    require_close(grpo_loss(g, adv, hp, Eigen::VectorXd()), 0.0, 1e-12,
                  "identity-ratio loss");
  }
  {
    RolloutGroup g;
    g.question = "clip";
    Rollout r;
    r.tokens = {0};
    r.logp_current = std::log(1.5);
    r.logp_old = 0.0;
    g.rollouts.push_back(r);
    Eigen::VectorXd adv(1);
    adv << 1.0;
    require_close(grpo_loss(g, adv, hp, Eigen::VectorXd()), -1.2, 1e-12,
                  "rho 1.5 clip");
  }
  {
    RolloutGroup g;
    g.question = "clip";
    Rollout r;
    r.tokens = {0};
    r.logp_current = std::log(0.5);
    r.logp_old = 0.0;
    g.rollouts.push_back(r);
    Eigen::VectorXd adv(1);
    adv << -1.0;
    require_close(grpo_loss(g, adv, hp, Eigen::VectorXd()), 0.8, 1e-12,
                  "rho 0.5 clip");
  }
}

void criterion_filter_calibration() {
  SolverConfig sim;
  sim.backend = SolverBackend::Simulated;
  sim.seed = 2024;
  sim.skill.base_success = 0.5;
  SolverGateway gateway(sim);
  SelectionPolicy policy;  // tau 0.3 inclusive, K 32

  std::vector<ErrorRateEstimate> estimates;
  std::vector<int> wrong_counts;
  double sum = 0.0;
  for (int i = 0; i < 500; ++i) {
    SampleRecord s;
    s.id = "cal" + std::to_string(i);
    s.question = "q";
    s.ground_truth = "5";
    s.difficulty = 0;
    const ErrorRateEstimate est = estimate_error_rate(s, gateway, policy);
    require(est.evaluated && est.k == 32, "estimation incomplete");
    estimates.push_back(est);
    wrong_counts.push_back(est.wrong);
    sum += est.error_rate;
  }
  const double mean = sum / 500.0;
  const double band = 2.5758 * std::sqrt(0.25 / (500.0 * 32.0));
  require_close(mean, 0.5, band, "mean error rate outside 99% binomial band");

  const auto [retained, report] = select_training_set(estimates, policy);
  std::set<std::string> retained_set(retained.begin(), retained.end());
  for (int i = 0; i < 500; ++i) {
    const bool expect = wrong_counts[i] >= 10;  // ceil(0.3 * 32)
    require(retained_set.count(estimates[i].sample_id) == (expect ? 1u : 0u),
            "retention mismatch at wrong-count " +
                std::to_string(wrong_counts[i]));
  }

  SolverConfig oracle;
  oracle.backend = SolverBackend::Oracle;
  SolverGateway oracle_gateway(oracle);
  std::vector<ErrorRateEstimate> oracle_estimates;
  for (int i = 0; i < 50; ++i) {
    SampleRecord s;
    s.id = "oracle" + std::to_string(i);
    s.question = "q";
    s.ground_truth = "5";
    s.reasoning = "Step 1: done.";
    oracle_estimates.push_back(
        estimate_error_rate(s, oracle_gateway, policy));
  }
  const auto [oracle_retained, oracle_report] =
      select_training_set(oracle_estimates, policy);
  require(oracle_retained.empty(), "oracle retention should be empty");
}

void criterion_geometry_oracle() {
  const auto t0 = std::chrono::steady_clock::now();

  Diagram pythag;
  pythag.points = {{"A", {0, 0}}, {"B", {3, 4}}};
  require_close(measure(pythag, {MeasureKind::Distance, {"A", "B"}}), 5.0,
                1e-12, "3-4-5 distance");
  Diagram rect;
  rect.points = {{"A", {0, 0}}, {"B", {4, 0}}, {"C", {4, 3}}, {"D", {0, 3}}};
  require_close(
      measure(rect, {MeasureKind::PolygonArea, {"A", "B", "C", "D"}}), 12.0,
      1e-12, "axis-aligned area");

  SplitMix64 rng(1006);
  for (int trial = 0; trial < 120; ++trial) {
    const Diagram d = make_seed_diagram(rng.next(), trial % 5);
    require(check_constraints(d).pass, "seed diagram violates constraints");

    // perpendicular foot orthogonality on the first two points vs any third
    const Vec2 a = d.points[0].pos;
    const Vec2 b = d.points[1].pos;
    const Vec2 p = d.points[2].pos;
    if ((b - a).norm() > 1e-6 && point_line_distance(p, a, b) > 1e-6) {
      const Vec2 f = perpendicular_foot(p, a, b);
      require(std::fabs((p - f).dot(b - a)) /
                      std::max(1.0, (p - f).norm() * (b - a).norm()) <
                  1e-9,
              "foot not orthogonal");
      require(point_line_distance(f, a, b) < 1e-9, "foot off the line");
    }

    const double angle = rng.uniform(0.0, 2 * M_PI);
    const Vec2 shift(rng.uniform(-30.0, 30.0), rng.uniform(-30.0, 30.0));
    const Diagram moved = transformed(d, angle, shift);
    require(check_constraints(moved).pass == check_constraints(d).pass,
            "rigid motion flipped pass/fail");

    const std::string l0 = d.points[0].label, l1 = d.points[1].label,
                      l2 = d.points[2].label;
    const MeasurementQuery queries[] = {
        {MeasureKind::Distance, {l0, l1}},
        {MeasureKind::Angle, {l1, l0, l2}},
        {MeasureKind::PolygonArea, {l0, l1, l2}},
        {MeasureKind::Perimeter, {l0, l1, l2}},
    };
    for (const auto& q : queries) {
      double before = 0.0, after = 0.0;
      try {
        before = measure(d, q);
        after = measure(moved, q);
      } catch (const DiagramError&) {
        continue;  // degenerate triple in this family
      }
      require(std::fabs(before - after) < 1e-9,
              "measurement moved under rigid motion");
    }
  }

  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
  require(secs < 5.0, "too slow: " + std::to_string(secs) + " s");
}

void criterion_synthesis_soundness() {
  SolverConfig oracle;
  oracle.backend = SolverBackend::Oracle;
  SolverGateway gateway(oracle);

  SplitMix64 rng(1007);
  int emitted = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Diagram d = make_seed_diagram(rng.next(), trial % 5);
    const AuxiliaryProposal proposal = gateway.propose_auxiliary(d, "");
    for (const auto& cmd : proposal.commands) d = apply_auxiliary(d, cmd);
    const FormalDescription f =
        emit_formal_description(d, "acc" + std::to_string(trial));

    std::vector<SubProblem> subs;
    try {
      subs = generate_subproblems(f, d, SynthesisConfig{}, rng.next());
    } catch (const TooSimpleError&) {
      continue;
    }
    require(subs.size() >= 4 && subs.size() <= 10,
            "sub-problem count " + std::to_string(subs.size()) +
                " outside [4,10]");
    for (const auto& s : subs) {
      const double expect = independent_eval(d, s.target_key);
      require_close(*parse_number(s.answer), expect,
                    std::max(1e-6, 1e-5 * std::fabs(expect)),
                    "sub-problem answer vs independent oracle");
    }

    ComposedProblem p;
    try {
      p = compose_problem(subs, rng.next(), d.auxiliary_count(), f);
    } catch (const CompositionError&) {
      continue;
    }
    ++emitted;
    const double expect = independent_eval(d, p.terminal_key);
    require_close(*parse_number(p.ground_truth), expect,
                  std::max(1e-6, 1e-5 * std::fabs(expect)),
                  "composed ground truth vs independent re-measurement");
    require(alignment_filter(p, d).keep, "kept problem fails alignment");
  }
  require(emitted >= 25, "too few compositions emitted: " +
                             std::to_string(emitted));
}

void criterion_closed_loop() {
  const auto t0 = std::chrono::steady_clock::now();

  const std::string dir_a =
      (fs::temp_directory_path() / "geoevo_acc_loop_a").string();
  const std::string dir_b =
      (fs::temp_directory_path() / "geoevo_acc_loop_b").string();
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);

  auto config_for = [](const std::string& dir) {
    LoopConfig cfg;
    cfg.out_dir = dir;
    cfg.root_seed = 7;
    cfg.seed_dataset = dir + "/seed.jsonl";
    cfg.evolve_solver.backend = SolverBackend::Oracle;
    cfg.filter_solver.backend = SolverBackend::Simulated;
    cfg.filter_solver.seed = 7;
    cfg.filter_solver.skill.base_success = 0.4;
    cfg.filter_solver.skill.iteration_gain = 0.2;
    cfg.filter_solver.skill.difficulty_slope = 0.05;
    cfg.train.sft_steps = 15;
    cfg.train.rl_steps = 8;
    return cfg;
  };

  SchedulePlan plan;
  plan.total_iterations = 3;

  const LoopConfig cfg_a = config_for(dir_a);
  fs::create_directories(dir_a);
  write_jsonl(cfg_a.seed_dataset, make_seed_dataset(10, 7));
  const auto manifests = run_loop(plan, cfg_a);
  require(manifests.size() == 3, "expected 3 manifests");

  for (size_t i = 1; i < manifests.size(); ++i) {
    require(manifests[i].stats.mean_reasoning_tokens >=
                manifests[i - 1].stats.mean_reasoning_tokens - 1e-9,
            "mean reasoning length decreased");
    require(manifests[i].stats.mean_aux_count >=
                manifests[i - 1].stats.mean_aux_count - 1e-9,
            "mean auxiliary count decreased");
  }

  for (const auto& m : manifests) {
    const std::string tag =
        "sim-it" + std::to_string(m.iteration);
    for (const auto& r : read_jsonl(m.train_dataset)) {
      require(r.status == "active", "non-active record in train set");
      require(r.error_rate && *r.error_rate >= 0.3,
              "train record below the error-rate threshold");
      require(r.error_rate_model == tag, "wrong solver tag on train record");
    }
  }

  const LoopConfig cfg_b = config_for(dir_b);
  fs::create_directories(dir_b);
  write_jsonl(cfg_b.seed_dataset, make_seed_dataset(10, 7));
  run_loop(plan, cfg_b);
  for (int t = 1; t <= 3; ++t) {
    const std::string stem = "/dataset_d" + std::to_string(t + 1) + ".jsonl";
    std::ifstream fa(dir_a + stem), fb(dir_b + stem);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    require(sa.str() == sb.str() && !sa.str().empty(),
            "rerun datasets differ at iteration " + std::to_string(t));
  }

  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
  require(secs < 120.0, "too slow: " + std::to_string(secs) + " s");
}

void criterion_reward_table() {
  struct Row {
    const char* raw;
    const char* truth;
    int accuracy;
    int format;
    double penalty;
  };
  const Row rows[] = {
      {"<think>Step 1: ok.</think><answer>5</answer>", "5", 1, 1, 0.0},
      {"<think>Step 1: a. Step 2: b.</think><answer>12.5</answer>", "12.5", 1,
       1, 0.0},
      {"<answer>5</answer><think>x</think>", "5", 0, 0, 0.0},
      {"<think>only thinking</think>", "5", 0, 0, 0.0},
      {"<answer>5</answer>", "5", 0, 0, 0.0},
      {"", "5", 0, 0, 0.0},
      {"<think>Step 2: late.</think><answer>5</answer>", "5", 1, 1, -0.5},
      {"<think>Step 1: a. Step 3: skip.</think><answer>5</answer>", "5", 1, 1,
       -0.5},
      {"<think>Step 1: a. Step 2: b. Step 1: replay.</think>"
       "<answer>5</answer>",
       "5", 1, 1, -0.5},
      {"<think>Step 1: half.</think><answer>3/2</answer>", "1.5", 1, 1, 0.0},
      {"<think>Step 1: angle.</think><answer>90\xC2\xB0</answer>", "90", 1, 1,
       0.0},
      {"<think>Step 1: angle.</think><answer>90 degrees</answer>", "90", 1, 1,
       0.0},
      {"  <think>Step 1: pad.</think>  <answer>5</answer>  ", "5", 1, 1, 0.0},
      {"\n<think>Step 1: pad.</think>\n<answer>5</answer>\n", "5", 1, 1, 0.0},
      {"<think>Step 1: close.</think><answer>5.004</answer>", "5", 1, 1, 0.0},
      {"<think>Step 1: off.</think><answer>5.2</answer>", "5", 0, 1, 0.0},
      {"<think>Step 1: wrong.</think><answer>6</answer>", "5", 0, 1, 0.0},
      {"<think>no steps</think><answer>-2.5</answer>", "-2.5", 1, 1, 0.0},
  };
  const RewardConfig cfg;
  int n = 0;
  for (const Row& row : rows) {
    const RewardBreakdown r = score(row.raw, row.truth, cfg);
    const double want_total = cfg.accuracy_weight * row.accuracy +
                              cfg.format_weight * row.format + row.penalty;
    require(r.accuracy == row.accuracy,
            "accuracy mismatch on fixture " + std::to_string(n));
    require(r.format == row.format,
            "format mismatch on fixture " + std::to_string(n));
    require(r.order_penalty == row.penalty,
            "penalty mismatch on fixture " + std::to_string(n));
    require(r.total == want_total,
            "total mismatch on fixture " + std::to_string(n));
    ++n;
  }
  require(n >= 15, "fixture too small");
}

void criterion_schedule_fidelity() {
  struct PlanCase {
    const char* name;
    IterationMode later_mode;
    WarmStart warm_start;
    const char* mode2;
    const char* warm2;
    bool sft2;
  };
  const PlanCase cases[] = {
      {"sft+rl warm-start", IterationMode::SftThenRl, WarmStart::PreviousRl,
       "sft+rl", "previous-rl", true},
      {"rl-only warm-start", IterationMode::RlOnly, WarmStart::PreviousRl,
       "rl-only", "previous-rl", false},
      {"sft+rl from-initial", IterationMode::SftThenRl, WarmStart::Initial,
       "sft+rl", "initial", true},
  };

  for (const PlanCase& pc : cases) {
    const std::string dir =
        (fs::temp_directory_path() / ("geoevo_acc_sched_" +
                                      std::to_string(&pc - cases)))
            .string();
    fs::remove_all(dir);
    fs::create_directories(dir);

    LoopConfig cfg;
    cfg.out_dir = dir;
    cfg.root_seed = 5;
    cfg.seed_dataset = dir + "/seed.jsonl";
    write_jsonl(cfg.seed_dataset, make_seed_dataset(5, 5));
    cfg.evolve_solver.backend = SolverBackend::Oracle;
    cfg.filter_solver.backend = SolverBackend::Simulated;
    cfg.filter_solver.seed = 5;
    cfg.filter_solver.skill.base_success = 0.4;
    cfg.filter_solver.skill.iteration_gain = 0.2;
    cfg.filter_solver.skill.difficulty_slope = 0.05;
    cfg.selection.k_forwards = 8;
    cfg.train.sft_steps = 2;
    cfg.train.rl_steps = 1;
    cfg.grpo.group_size_schedule = {4, 4};

    SchedulePlan plan;
    plan.total_iterations = 2;
    plan.later_mode = pc.later_mode;
    plan.warm_start = pc.warm_start;

    const auto manifests = run_loop(plan, cfg);
    require(manifests.size() == 2, std::string(pc.name) + ": manifests");
    require(manifests[0].schedule_mode == "sft+rl",
            std::string(pc.name) + ": iteration 1 must be sft+rl");
    require(!manifests[0].sft_checkpoint.empty() &&
                !manifests[0].rl_checkpoint.empty(),
            std::string(pc.name) + ": iteration 1 checkpoints");
    require(manifests[1].schedule_mode == pc.mode2,
            std::string(pc.name) + ": iteration 2 mode");
    require(manifests[1].warm_start == pc.warm2,
            std::string(pc.name) + ": iteration 2 warm start");
    require(manifests[1].sft_checkpoint.empty() != pc.sft2,
            std::string(pc.name) + ": iteration 2 sft checkpoint presence");
    require(!manifests[1].rl_checkpoint.empty(),
            std::string(pc.name) + ": iteration 2 rl checkpoint");
    fs::remove_all(dir);
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void()>>> criteria = {
      {"1 GRPO gradient check (beta 0 and 0.1, rel 1e-5, <10 s)",
       criterion_grpo_gradients},
      {"2 SFT gradient check and uniform-policy ln V", criterion_sft_gradients},
      {"3 advantage laws on 1000 random groups", criterion_advantage_laws},
      {"4 hand-derived clip values (-1.2, +0.8, 0)", criterion_clip_behavior},
      {"5 filter calibration, threshold boundary, oracle retention",
       criterion_filter_calibration},
      {"6 geometry oracle suite on randomized diagrams (<5 s)",
       criterion_geometry_oracle},
      {"7 synthesis soundness on a 50-diagram corpus",
       criterion_synthesis_soundness},
      {"8 closed-loop smoke test, 3 iterations (<2 min)",
       criterion_closed_loop},
      {"9 reward verifier fixture table", criterion_reward_table},
      {"10 schedule fidelity across plan variants",
       criterion_schedule_fidelity},
  };

  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn();
      const double secs = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
      std::printf("[PASS] criterion %s (%.2f s)\n", name.c_str(), secs);
    } catch (const std::exception& e) {
      ++failures;
      std::printf("[FAIL] criterion %s: %s\n", name.c_str(), e.what());
    }
  }
  if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
