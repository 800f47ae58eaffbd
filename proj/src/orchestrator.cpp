#include "geoevo/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "geoevo/numeric.hpp"
#include "geoevo/rng.hpp"
#include "geoevo/svg.hpp"

namespace geoevo {

namespace fs = std::filesystem;

namespace {

void write_text_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw OrchestratorError("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, target);
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw OrchestratorError("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string iter_path(const LoopConfig& cfg, const std::string& stem) {
  return (fs::path(cfg.out_dir) / stem).string();
}

double char_match_fraction(const std::string& sampled,
                           const std::string& target) {
  if (target.empty()) return 0.0;
  const size_t n = std::max(sampled.size(), target.size());
  size_t match = 0;
  for (size_t i = 0; i < sampled.size() && i < target.size(); ++i)
    match += sampled[i] == target[i] ? 1 : 0;
  return static_cast<double>(match) / static_cast<double>(n);
}

std::vector<SampleRecord> records_by_id(const std::vector<SampleRecord>& all,
                                        const std::vector<std::string>& ids) {
  std::set<std::string> wanted(ids.begin(), ids.end());
  std::vector<SampleRecord> out;
  for (const auto& r : all)
    if (wanted.count(r.id)) out.push_back(r);
  return out;
}

}  // namespace

nlohmann::json TrainJobSpec::to_json() const {
  return {{"phase", phase},
          {"dataset", dataset_path},
          {"learning_rate", learning_rate},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"group_size", group_size},
          {"clip_epsilon", clip_epsilon},
          {"kl_beta", kl_beta},
          {"temperature", temperature},
          {"warm_start_checkpoint", warm_start_checkpoint}};
}

nlohmann::json IterationStats::to_json() const {
  return {{"record_count", record_count},
          {"new_count", new_count},
          {"retained", retained},
          {"unevaluated", unevaluated},
          {"mean_reasoning_tokens", mean_reasoning_tokens},
          {"mean_aux_count", mean_aux_count},
          {"mean_difficulty", mean_difficulty}};
}

IterationStats IterationStats::from_json(const nlohmann::json& j) {
  IterationStats s;
  s.record_count = j.value("record_count", 0);
  s.new_count = j.value("new_count", 0);
  s.retained = j.value("retained", 0);
  s.unevaluated = j.value("unevaluated", 0);
  s.mean_reasoning_tokens = j.value("mean_reasoning_tokens", 0.0);
  s.mean_aux_count = j.value("mean_aux_count", 0.0);
  s.mean_difficulty = j.value("mean_difficulty", 0.0);
  return s;
}

nlohmann::json IterationManifest::to_json() const {
  return {{"iteration", iteration},
          {"input_dataset", input_dataset},
          {"evolved_dataset", evolved_dataset},
          {"train_dataset", train_dataset},
          {"filter_report", filter_report},
          {"schedule_mode", schedule_mode},
          {"warm_start", warm_start},
          {"sft_checkpoint", sft_checkpoint},
          {"rl_checkpoint", rl_checkpoint},
          {"stats", stats.to_json()},
          {"timestamp", timestamp}};
}

IterationManifest IterationManifest::from_json(const nlohmann::json& j) {
  IterationManifest m;
  m.iteration = j.at("iteration").get<int>();
  m.input_dataset = j.value("input_dataset", "");
  m.evolved_dataset = j.at("evolved_dataset").get<std::string>();
  m.train_dataset = j.value("train_dataset", "");
  m.filter_report = j.value("filter_report", "");
  m.schedule_mode = j.value("schedule_mode", "");
  m.warm_start = j.value("warm_start", "");
  m.sft_checkpoint = j.value("sft_checkpoint", "");
  m.rl_checkpoint = j.value("rl_checkpoint", "");
  m.stats = IterationStats::from_json(j.value("stats", nlohmann::json::object()));
  m.timestamp = j.value("timestamp", "");
  return m;
}

nlohmann::json EvolveReport::to_json() const {
  nlohmann::json entries_json = nlohmann::json::array();
  for (const auto& e : entries)
    entries_json.push_back({{"sample_id", e.sample_id},
                            {"outcome", e.outcome},
                            {"detail", e.detail},
                            {"new_id", e.new_id}});
  return {{"entries", entries_json},
          {"evolved", evolved},
          {"passed_through", passed_through}};
}

EvolveResult evolve_dataset(const std::vector<SampleRecord>& input,
                            const SolverGateway& gateway,
                            const SynthesisConfig& cfg, uint64_t seed,
                            int iteration, const std::string& assets_dir,
                            bool accumulate) {
  EvolveResult result;
  std::vector<std::string> passthrough_ids;

  for (const auto& record : input) {
    const uint64_t record_seed = mix_seed(seed, record.id);
    EvolveEntry entry;
    entry.sample_id = record.id;

    auto pass_through = [&](const std::string& outcome,
                            const std::string& detail) {
      entry.outcome = outcome;
      entry.detail = detail;
      passthrough_ids.push_back(record.id);
      ++result.report.passed_through;
      result.report.entries.push_back(entry);
    };

    Diagram d;
    try {
      d = record.diagram();
    } catch (const DiagramError& e) {
      pass_through("construction-failed", e.what());
      continue;
    }

    const AuxiliaryProposal proposal =
        gateway.propose_auxiliary(d, record.question);
    if (proposal.commands.empty()) {
      pass_through("no-proposal", proposal.thought);
      continue;
    }

    Diagram evolved = d;
    try {
      for (const auto& cmd : proposal.commands)
        evolved = apply_auxiliary(evolved, cmd);
    } catch (const DiagramError& e) {
      pass_through("construction-failed", e.what());
      continue;
    }

    const FormalDescription description =
        emit_formal_description(evolved, record.id);

    std::vector<SubProblem> subs;
    try {
      subs = generate_subproblems(description, evolved, cfg, record_seed);
    } catch (const TooSimpleError& e) {
      pass_through("too-simple", e.what());
      continue;
    }

    ComposedProblem composed;
    try {
      composed = compose_problem(subs, mix_seed(record_seed, "compose"),
                                 evolved.auxiliary_count(), description);
    } catch (const CompositionError& e) {
      pass_through("not-composable", e.what());
      continue;
    }

    const ConsistencyDecision consistency =
        consistency_filter(composed, gateway, cfg.consistency_attempts);
    if (!consistency.keep) {
      pass_through("inconsistent", consistency.reason);
      continue;
    }

    const AlignmentDecision alignment = alignment_filter(composed, evolved);
    if (!alignment.keep) {
      std::string why;
      for (const auto& r : alignment.reasons) why += r + "; ";
      pass_through("misaligned", why);
      continue;
    }

    SampleRecord child;
    child.id = record.id + "." + std::to_string(iteration + 1);
    child.iteration = iteration + 1;
    child.diagram_spec = to_spec_json(evolved);
    child.question = composed.question;
    child.ground_truth = composed.ground_truth;
    child.reasoning = composed.reasoning_trace;
    child.subproblem_ids = composed.component_ids;
    std::set<std::string> used_principles;
    for (const auto& s : composed.components)
      used_principles.insert(to_string(s.principle));
    child.principles.assign(used_principles.begin(), used_principles.end());
    child.aux_count = evolved.auxiliary_count();
    child.reasoning_tokens = reasoning_length(composed);
    child.difficulty = composed.difficulty;
    child.parent_id = record.id;
    child.status = "active";

    if (!assets_dir.empty()) {
      fs::create_directories(assets_dir);
      const std::string svg_name = child.id + ".svg";
      write_text_atomic((fs::path(assets_dir) / svg_name).string(),
                        render_svg(evolved));
      // recorded relative to the dataset directory, so datasets stay portable
      child.svg_path =
          (fs::path(assets_dir).filename() / svg_name).string();
    }

    entry.outcome = "evolved";
    entry.new_id = child.id;
    ++result.report.evolved;
    result.report.entries.push_back(entry);
    result.created.push_back(std::move(child));
  }

  if (accumulate) {
    result.dataset = input;
  } else {
    const std::set<std::string> keep(passthrough_ids.begin(),
                                     passthrough_ids.end());
    for (const auto& r : input)
      if (keep.count(r.id)) result.dataset.push_back(r);
  }
  result.dataset.insert(result.dataset.end(), result.created.begin(),
                        result.created.end());
  return result;
}

namespace {

IterationStats stats_of(const std::vector<SampleRecord>& records, int t) {
  IterationStats s;
  s.record_count = static_cast<int>(records.size());
  for (const auto& r : records) {
    s.new_count += r.iteration == t + 1 ? 1 : 0;
    s.mean_reasoning_tokens += r.reasoning_tokens;
    s.mean_aux_count += r.aux_count;
    s.mean_difficulty += r.difficulty;
  }
  if (!records.empty()) {
    s.mean_reasoning_tokens /= records.size();
    s.mean_aux_count /= records.size();
    s.mean_difficulty /= records.size();
  }
  return s;
}

std::string save_policy(const ToyPolicy& policy, const LoopConfig& cfg,
                        const std::string& stem) {
  const std::string path =
      (fs::path(cfg.out_dir) / "checkpoints" / (stem + ".json")).string();
  write_text_atomic(path, policy.to_json().dump());
  return path;
}

ToyPolicy load_policy(const std::string& path) {
  return ToyPolicy::from_json(read_json_file(path));
}

// External-trainer handshake: a job file is "done" when a sibling
// <job>.checkpoint file names the resulting checkpoint.
std::string emit_job(const LoopConfig& cfg, const TrainJobSpec& job,
                     const std::string& stem) {
  const std::string path =
      (fs::path(cfg.out_dir) / "jobs" / (stem + ".json")).string();
  write_text_atomic(path, job.to_json().dump(2));
  const std::string handshake = path + ".checkpoint";
  if (fs::exists(handshake)) {
    std::ifstream in(handshake);
    std::string id;
    std::getline(in, id);
    if (!id.empty()) return id;
  }
  return "pending:" + path;
}

}  // namespace

IterationManifest run_iteration(int t,
                                const std::vector<IterationManifest>& history,
                                const SchedulePlan& plan,
                                const LoopConfig& cfg) {
  if (t < 1 || t > plan.total_iterations)
    throw OrchestratorError("iteration " + std::to_string(t) +
                            " outside the plan");
  if (static_cast<int>(history.size()) < t - 1)
    throw OrchestratorError("missing predecessor manifest for iteration " +
                            std::to_string(t));

  const IterationMode mode = plan.mode_for(t);
  fs::create_directories(cfg.out_dir);

  // ---- Co-evolving multimodal data ----
  const std::string input_path =
      t == 1 ? cfg.seed_dataset : history[t - 2].evolved_dataset;
  const std::vector<SampleRecord> input = read_jsonl(input_path);

  SolverGateway evolve_gateway(cfg.evolve_solver);
  evolve_gateway.set_skill_iteration(t);
  if (!cfg.transcripts_path.empty())
    evolve_gateway.enable_transcripts(cfg.transcripts_path);

  const uint64_t evolve_seed =
      mix_seed(cfg.root_seed, "evolve-t" + std::to_string(t));
  EvolveResult evolved =
      evolve_dataset(input, evolve_gateway, cfg.synthesis, evolve_seed, t,
                     iter_path(cfg, "assets"), plan.accumulate);
  write_text_atomic(
      iter_path(cfg, "evolve_report_t" + std::to_string(t) + ".json"),
      evolved.report.to_json().dump(2));

  // ---- Error-rate filtering against the current solver ----
  SolverGateway filter_gateway(cfg.filter_solver);
  filter_gateway.set_skill_iteration(t);
  if (!cfg.transcripts_path.empty())
    filter_gateway.enable_transcripts(cfg.transcripts_path);

  std::vector<ErrorRateEstimate> estimates;
  for (const auto& record : evolved.dataset) {
    if (plan.scope == DatasetScope::CurrentOnly && record.iteration != t + 1)
      continue;
    estimates.push_back(
        estimate_error_rate(record, filter_gateway, cfg.selection, cfg.reward));
  }
  auto [retained_ids, filter_report] =
      select_training_set(estimates, cfg.selection);
  filter_report.histogram.iteration = t;

  const std::set<std::string> retained_set(retained_ids.begin(),
                                           retained_ids.end());
  for (auto& record : evolved.dataset) {
    const auto est = std::find_if(
        estimates.begin(), estimates.end(),
        [&](const ErrorRateEstimate& e) { return e.sample_id == record.id; });
    if (est == estimates.end()) continue;
    if (!est->evaluated) {
      record.status = "unevaluated";
      continue;
    }
    record.error_rate = est->error_rate;
    record.error_rate_model = est->model_tag;
    record.status = retained_set.count(record.id) ? "active" : "filtered-out";
  }

  const std::string evolved_path =
      iter_path(cfg, "dataset_d" + std::to_string(t + 1) + ".jsonl");
  write_jsonl(evolved_path, evolved.dataset);

  const std::string filter_report_path =
      iter_path(cfg, "filter_report_t" + std::to_string(t) + ".json");
  write_text_atomic(filter_report_path, filter_report.to_json().dump(2));

  const std::vector<SampleRecord> train_records =
      records_by_id(evolved.dataset, retained_ids);
  const std::string train_path =
      iter_path(cfg, "train_t" + std::to_string(t) + ".jsonl");
  write_jsonl(train_path, train_records);

  // ---- Co-evolving data and model ----
  IterationManifest manifest;
  manifest.iteration = t;
  manifest.input_dataset = input_path;
  manifest.evolved_dataset = evolved_path;
  manifest.train_dataset = train_path;
  manifest.filter_report = filter_report_path;
  manifest.schedule_mode =
      mode == IterationMode::SftThenRl ? "sft+rl" : "rl-only";
  manifest.warm_start = t == 1 ? "initial" : to_string(plan.warm_start);

  if (cfg.external_training) {
    std::string warm = "initial";
    if (t > 1 && plan.warm_start == WarmStart::PreviousRl)
      warm = history[t - 2].rl_checkpoint;
    if (mode == IterationMode::SftThenRl) {
      TrainJobSpec sft;
      sft.phase = "sft";
      sft.dataset_path = train_path;
      sft.learning_rate = 1e-5;
      sft.warm_start_checkpoint = warm;
      manifest.sft_checkpoint =
          emit_job(cfg, sft, "job_sft_t" + std::to_string(t));
      warm = manifest.sft_checkpoint;
    }
    TrainJobSpec rl;
    rl.phase = "rl";
    rl.dataset_path = train_path;
    rl.learning_rate = 1e-6;
    rl.group_size = cfg.grpo.group_size_for(t);
    rl.clip_epsilon = cfg.grpo.clip_epsilon;
    rl.kl_beta = cfg.grpo.kl_beta;
    rl.warm_start_checkpoint = warm;
    manifest.rl_checkpoint = emit_job(cfg, rl, "job_rl_t" + std::to_string(t));
  } else {
    // Toy policy, trained in-process.
    ToyPolicyConfig policy_cfg = cfg.train.policy;
    policy_cfg.seed = mix_seed(cfg.root_seed, "policy-init");
    ToyPolicy policy = ToyPolicy::seeded(policy_cfg);
    if (t > 1 && plan.warm_start == WarmStart::PreviousRl) {
      if (history[t - 2].rl_checkpoint.empty())
        throw OrchestratorError("previous iteration has no RL checkpoint");
      policy = load_policy(history[t - 2].rl_checkpoint);
    }

    if (mode == IterationMode::SftThenRl && !train_records.empty()) {
      std::vector<std::pair<std::string, std::vector<int>>> batch;
      for (const auto& r : train_records)
        batch.emplace_back(r.question, policy.encode(r.ground_truth));
      std::ostringstream metrics;
      for (int step = 0; step < cfg.train.sft_steps; ++step)
        metrics << sft_train_step(policy, batch, cfg.train.sft_learning_rate,
                                  step)
                       .to_json()
                       .dump()
                << "\n";
      write_text_atomic(
          iter_path(cfg, "metrics_sft_t" + std::to_string(t) + ".jsonl"),
          metrics.str());
    }
    if (mode == IterationMode::SftThenRl)
      manifest.sft_checkpoint =
          save_policy(policy, cfg, "policy_sft_t" + std::to_string(t));

    if (!train_records.empty()) {
      const int group_size = cfg.grpo.group_size_for(t);
      std::ostringstream metrics;
      for (int step = 0; step < cfg.train.rl_steps; ++step) {
        std::vector<RolloutGroup> batch;
        for (const auto& r : train_records) {
          const uint64_t rollout_seed = mix_seed(
              mix_seed(cfg.root_seed, "rl-t" + std::to_string(t) + "-s" +
                                          std::to_string(step)),
              r.id);
          const int length =
              static_cast<int>(policy.encode(r.ground_truth).size());
          auto reward_fn = [&](const std::string& sampled) {
            const RewardBreakdown b =
                score(wrap_response("Step 1: compute the value.", sampled),
                      r.ground_truth, cfg.reward);
            return b.total + char_match_fraction(sampled, r.ground_truth);
          };
          batch.push_back(sample_rollout_group(policy, r.question, group_size,
                                               length, rollout_seed,
                                               reward_fn));
        }
        metrics << grpo_train_step(policy, batch, cfg.grpo, step)
                       .to_json()
                       .dump()
                << "\n";
      }
      write_text_atomic(
          iter_path(cfg, "metrics_rl_t" + std::to_string(t) + ".jsonl"),
          metrics.str());
    }
    manifest.rl_checkpoint =
        save_policy(policy, cfg, "policy_rl_t" + std::to_string(t));
  }

  manifest.stats = stats_of(evolved.dataset, t);
  manifest.stats.retained = filter_report.retained;
  manifest.stats.unevaluated = filter_report.unevaluated;
  manifest.timestamp = iso_timestamp();

  write_text_atomic(
      iter_path(cfg, "manifest_t" + std::to_string(t) + ".json"),
      manifest.to_json().dump(2));
  return manifest;
}

std::vector<IterationManifest> run_loop(const SchedulePlan& plan,
                                        const LoopConfig& cfg) {
  std::vector<IterationManifest> manifests;
  if (plan.total_iterations <= 0) return manifests;

  fs::create_directories(cfg.out_dir);
  for (int t = 1; t <= plan.total_iterations; ++t) {
    const std::string manifest_path =
        iter_path(cfg, "manifest_t" + std::to_string(t) + ".json");
    if (fs::exists(manifest_path)) {
      manifests.push_back(
          IterationManifest::from_json(read_json_file(manifest_path)));
      continue;
    }
    manifests.push_back(run_iteration(t, manifests, plan, cfg));
  }
  return manifests;
}

nlohmann::json DatasetStats::to_json() const {
  return {{"count", count},
          {"mean_reasoning_tokens", mean_reasoning_tokens},
          {"min_reasoning_tokens", min_reasoning_tokens},
          {"max_reasoning_tokens", max_reasoning_tokens},
          {"mean_aux_count", mean_aux_count},
          {"mean_difficulty", mean_difficulty},
          {"principle_usage", principle_usage},
          {"status_counts", status_counts},
          {"malformed", malformed}};
}

DatasetStats dataset_stats(const std::vector<SampleRecord>& records) {
  DatasetStats s;
  s.count = static_cast<int>(records.size());
  bool first = true;
  for (const auto& r : records) {
    s.mean_reasoning_tokens += r.reasoning_tokens;
    s.mean_aux_count += r.aux_count;
    s.mean_difficulty += r.difficulty;
    if (first || r.reasoning_tokens < s.min_reasoning_tokens)
      s.min_reasoning_tokens = r.reasoning_tokens;
    if (first || r.reasoning_tokens > s.max_reasoning_tokens)
      s.max_reasoning_tokens = r.reasoning_tokens;
    first = false;
    for (const auto& p : r.principles) ++s.principle_usage[p];
    ++s.status_counts[r.status];
  }
  if (!records.empty()) {
    s.mean_reasoning_tokens /= records.size();
    s.mean_aux_count /= records.size();
    s.mean_difficulty /= records.size();
  }
  return s;
}

DatasetStats dataset_stats_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open dataset: " + path);
  std::vector<SampleRecord> good;
  std::vector<std::string> malformed;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      good.push_back(SampleRecord::from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      malformed.push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  DatasetStats s = dataset_stats(good);
  s.malformed = std::move(malformed);
  return s;
}

SchedulePlan schedule_plan_from(const TomlTable& t, int total_iterations) {
  SchedulePlan plan;
  plan.total_iterations = total_iterations;
  const std::string later = t.get_string("schedule", "later_mode", "rl-only");
  if (later == "rl-only")
    plan.later_mode = IterationMode::RlOnly;
  else if (later == "sft+rl")
    plan.later_mode = IterationMode::SftThenRl;
  else
    throw ConfigError("unknown later_mode '" + later + "'");
  const std::string warm =
      t.get_string("schedule", "warm_start", "previous-rl");
  if (warm == "previous-rl")
    plan.warm_start = WarmStart::PreviousRl;
  else if (warm == "initial")
    plan.warm_start = WarmStart::Initial;
  else
    throw ConfigError("unknown warm_start '" + warm + "'");
  const std::string scope = t.get_string("schedule", "scope", "current-only");
  if (scope == "current-only")
    plan.scope = DatasetScope::CurrentOnly;
  else if (scope == "cumulative")
    plan.scope = DatasetScope::Cumulative;
  else
    throw ConfigError("unknown scope '" + scope + "'");
  plan.accumulate = t.get_bool("schedule", "accumulate", true);
  return plan;
}

LoopConfig LoopConfig::from_toml(const TomlTable& t) {
  LoopConfig cfg;
  cfg.out_dir = t.get_string("", "out_dir", cfg.out_dir);
  cfg.seed_dataset = t.get_string("", "seed_dataset", cfg.seed_dataset);
  cfg.root_seed = static_cast<uint64_t>(t.get_number("", "seed", 1));
  cfg.external_training =
      t.get_bool("schedule", "external_training", false);

  auto solver_from = [&](const std::string& key, SolverBackend fallback) {
    SolverConfig sc;
    sc.backend =
        solver_backend_from(t.get_string("solver", key, to_string(fallback)));
    sc.api_base = t.get_string("solver", "api_base", "");
    sc.api_key = t.get_string("solver", "api_key", "");
    sc.model = t.get_string("solver", "model", "local");
    sc.temperature = t.get_number("solver", "temperature", 0.9);
    sc.max_in_flight = t.get_int("solver", "max_in_flight", 4);
    sc.seed = static_cast<uint64_t>(t.get_number("solver", "seed", 1));
    // desk-scale default: a solver that starts weak, improves per iteration
    // and degrades with difficulty, so the filter has a frontier to track
    sc.skill.base_success = t.get_number("solver", "p0", 0.4);
    sc.skill.iteration_gain = t.get_number("solver", "delta", 0.2);
    sc.skill.difficulty_slope = t.get_number("solver", "slope", 0.05);
    return SolverConfig::with_env(std::move(sc));
  };
  cfg.evolve_solver = solver_from("evolve_backend", SolverBackend::Oracle);
  cfg.filter_solver = solver_from("filter_backend", SolverBackend::Simulated);

  cfg.synthesis.m_min = t.get_int("synthesis", "m_min", 4);
  cfg.synthesis.m_max = t.get_int("synthesis", "m_max", 10);
  cfg.synthesis.consistency_attempts =
      t.get_int("synthesis", "consistency_attempts", 3);
  const auto principles = t.get_string_array(
      "synthesis", "principles",
      {"geometric-constraints", "new-theorems", "backward-reasoning"});
  cfg.synthesis.principles.clear();
  for (const auto& p : principles)
    cfg.synthesis.principles.insert(principle_from(p));
  const auto templates = t.get_string_array("synthesis", "templates", {});
  for (const auto& id : templates) {
    if (!all_template_ids().count(id))
      throw ConfigError("unknown template id '" + id + "'");
    cfg.synthesis.enabled_templates.insert(id);
  }

  cfg.selection.k_forwards = t.get_int("filter", "k", 32);
  cfg.selection.threshold = t.get_number("filter", "threshold", 0.3);
  cfg.selection.inclusive = t.get_bool("filter", "inclusive", true);

  cfg.grpo.clip_epsilon = t.get_number("grpo", "epsilon", 0.2);
  cfg.grpo.kl_beta = t.get_number("grpo", "beta", 0.0);
  cfg.grpo.learning_rate = t.get_number("grpo", "learning_rate", 0.5);
  const auto schedule =
      t.get_number_array("grpo", "group_schedule", {32.0, 8.0});
  cfg.grpo.group_size_schedule.clear();
  for (double g : schedule)
    cfg.grpo.group_size_schedule.push_back(static_cast<int>(g));
  cfg.train.sft_steps = t.get_int("grpo", "sft_steps", 60);
  cfg.train.rl_steps = t.get_int("grpo", "rl_steps", 25);
  cfg.train.sft_learning_rate =
      t.get_number("grpo", "sft_learning_rate", 2.0);
  return cfg;
}

const char* to_string(IterationMode m) {
  return m == IterationMode::SftThenRl ? "sft+rl" : "rl-only";
}

const char* to_string(WarmStart w) {
  return w == WarmStart::PreviousRl ? "previous-rl" : "initial";
}

const char* to_string(DatasetScope s) {
  return s == DatasetScope::CurrentOnly ? "current-only" : "cumulative";
}

}  // namespace geoevo
