// Command-line front end for the co-evolution pipeline.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "geoevo/dataset.hpp"
#include "geoevo/filter.hpp"
#include "geoevo/grpo.hpp"
#include "geoevo/orchestrator.hpp"
#include "geoevo/svg.hpp"

namespace {

using namespace geoevo;

void write_file(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

int cmd_seed(const std::string& out, int count, uint64_t seed) {
  write_jsonl(out, make_seed_dataset(count, seed));
  std::cout << "wrote " << count << " seed samples to " << out << "\n";
  return 0;
}

int cmd_render(const std::string& spec_path, const std::string& out) {
  std::ifstream in(spec_path);
  if (!in) throw std::runtime_error("cannot open spec: " + spec_path);
  nlohmann::json spec;
  in >> spec;
  const Diagram d = build_diagram(spec);
  write_file(out, render_svg(d));
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_stats(const std::string& dataset) {
  const DatasetStats s = dataset_stats_file(dataset);
  std::cout << s.to_json().dump(2) << "\n";
  return s.malformed.empty() ? 0 : 1;
}

SolverConfig make_solver(const std::string& backend, uint64_t seed, double p0,
                         double delta, double slope) {
  SolverConfig sc;
  sc.backend = solver_backend_from(backend);
  sc.seed = seed;
  sc.skill.base_success = p0;
  sc.skill.iteration_gain = delta;
  sc.skill.difficulty_slope = slope;
  return SolverConfig::with_env(std::move(sc));
}

int cmd_evolve(const std::string& dataset, const std::string& out,
               const std::string& backend, uint64_t seed,
               const std::string& report_path, const std::string& assets,
               const std::string& transcripts,
               const std::string& templates_path) {
  const auto input = read_jsonl(dataset);
  SolverGateway gateway(make_solver(backend, seed, 1.0, 0.0, 0.0));
  if (!transcripts.empty()) gateway.enable_transcripts(transcripts);

  SynthesisConfig cfg;
  if (!templates_path.empty())
    cfg.enabled_templates = load_template_registry(templates_path);

  int iteration = 1;
  for (const auto& r : input) iteration = std::max(iteration, r.iteration);

  const EvolveResult result = evolve_dataset(
      input, gateway, cfg, mix_seed(seed, "evolve"), iteration, assets, true);
  write_jsonl(out, result.dataset);
  if (!report_path.empty())
    write_file(report_path, result.report.to_json().dump(2));
  std::cout << "evolved " << result.report.evolved << ", passed through "
            << result.report.passed_through << ", dataset size "
            << result.dataset.size() << " -> " << out << "\n";
  return 0;
}

int cmd_filter(const std::string& dataset, const std::string& backend, int k,
               double threshold, uint64_t seed, const std::string& out,
               const std::string& report_path, double p0, double delta,
               double slope, int iteration, const std::string& transcripts) {
  auto records = read_jsonl(dataset);
  SolverGateway gateway(make_solver(backend, seed, p0, delta, slope));
  gateway.set_skill_iteration(iteration);
  if (!transcripts.empty()) gateway.enable_transcripts(transcripts);

  SelectionPolicy policy;
  policy.k_forwards = k;
  policy.threshold = threshold;

  std::vector<ErrorRateEstimate> estimates;
  estimates.reserve(records.size());
  for (const auto& r : records)
    estimates.push_back(estimate_error_rate(r, gateway, policy));
  auto [retained_ids, report] = select_training_set(estimates, policy);
  report.histogram.iteration = iteration;

  const std::set<std::string> retained(retained_ids.begin(),
                                       retained_ids.end());
  std::vector<SampleRecord> kept;
  for (size_t i = 0; i < records.size(); ++i) {
    records[i].error_rate = estimates[i].evaluated
                                ? std::optional<double>(estimates[i].error_rate)
                                : std::nullopt;
    records[i].error_rate_model = estimates[i].model_tag;
    if (!estimates[i].evaluated)
      records[i].status = "unevaluated";
    else if (retained.count(records[i].id))
      records[i].status = "active";
    else
      records[i].status = "filtered-out";
    if (records[i].status == "active") kept.push_back(records[i]);
  }
  write_jsonl(out, kept);
  if (!report_path.empty())
    write_file(report_path, report.to_json().dump(2));
  std::cout << "retained " << report.retained << "/" << report.total
            << " at threshold " << threshold << " -> " << out << "\n";
  return 0;
}

int cmd_loop(int iterations, const std::string& config_path, uint64_t seed,
             const std::string& dataset_override,
             const std::string& out_override, bool transcripts) {
  TomlTable table;
  if (!config_path.empty()) table = TomlTable::parse_file(config_path);
  LoopConfig cfg = LoopConfig::from_toml(table);
  cfg.root_seed = seed;
  if (!dataset_override.empty()) cfg.seed_dataset = dataset_override;
  if (!out_override.empty()) cfg.out_dir = out_override;
  if (transcripts)
    cfg.transcripts_path =
        (std::filesystem::path(cfg.out_dir) / "transcripts.jsonl").string();
  if (cfg.seed_dataset.empty())
    throw std::runtime_error("no seed dataset: pass --dataset or set "
                             "seed_dataset in the config");

  const SchedulePlan plan = schedule_plan_from(table, iterations);
  const auto manifests = run_loop(plan, cfg);
  for (const auto& m : manifests)
    std::cout << "iteration " << m.iteration << ": mode=" << m.schedule_mode
              << " records=" << m.stats.record_count
              << " new=" << m.stats.new_count
              << " retained=" << m.stats.retained << " mean_tokens="
              << m.stats.mean_reasoning_tokens << " mean_aux="
              << m.stats.mean_aux_count << "\n";
  std::cout << "wrote " << manifests.size() << " manifests under "
            << cfg.out_dir << "\n";
  return 0;
}

int cmd_grpo_demo(int steps, int group_size, double epsilon, double beta,
                  double lr, uint64_t seed, const std::string& metrics_path) {
  ToyPolicyConfig pc;
  pc.seed = seed;
  ToyPolicy policy = ToyPolicy::seeded(pc);

  const std::vector<std::pair<std::string, std::string>> tasks = {
      {"What is 25 divided by 2?", "12.5"},
      {"What is the hypotenuse of a 3-4 right triangle?", "5"},
      {"What is 7 times 6?", "42"},
      {"What is 100 minus 1?", "99"}};

  GrpoHyperparams hp;
  hp.clip_epsilon = epsilon;
  hp.kl_beta = beta;
  hp.learning_rate = lr;

  std::ostringstream metrics;
  for (int step = 0; step < steps; ++step) {
    std::vector<RolloutGroup> batch;
    for (size_t i = 0; i < tasks.size(); ++i) {
      const auto& [question, target] = tasks[i];
      auto reward_fn = [&target](const std::string& sampled) {
        double match = 0.0;
        for (size_t k = 0; k < sampled.size() && k < target.size(); ++k)
          match += sampled[k] == target[k] ? 1.0 : 0.0;
        match /= std::max(sampled.size(), target.size());
        return match + (sampled == target ? 1.0 : 0.0);
      };
      batch.push_back(sample_rollout_group(
          policy, question, group_size, static_cast<int>(target.size()),
          mix_seed(mix_seed(seed, static_cast<uint64_t>(step)), i),
          reward_fn));
    }
    const TrainMetrics m = grpo_train_step(policy, batch, hp, step);
    metrics << m.to_json().dump() << "\n";
    if (step % 10 == 0 || step == steps - 1)
      std::cout << "step " << m.step << " mean_reward " << m.mean_reward
                << " clip_fraction " << m.clip_fraction << " loss " << m.loss
                << "\n";
  }
  if (!metrics_path.empty()) write_file(metrics_path, metrics.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop co-evolution of geometry problems and a toy "
               "solver policy"};
  app.require_subcommand(1);

  // seed
  auto* seed_cmd = app.add_subcommand("seed", "Generate a seed dataset");
  std::string seed_out = "runs/seed.jsonl";
  int seed_count = 10;
  uint64_t seed_value = 1;
  seed_cmd->add_option("--out", seed_out, "Output JSONL path");
  seed_cmd->add_option("--count", seed_count, "Number of samples");
  seed_cmd->add_option("--seed", seed_value, "RNG seed");

  // render
  auto* render_cmd = app.add_subcommand("render", "Render a diagram spec to SVG");
  std::string render_spec, render_out = "diagram.svg";
  render_cmd->add_option("--spec", render_spec, "Diagram spec JSON")->required();
  render_cmd->add_option("--out", render_out, "Output SVG path");

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Summarize a dataset");
  std::string stats_dataset;
  stats_cmd->add_option("--dataset", stats_dataset, "Dataset JSONL")->required();

  // evolve
  auto* evolve_cmd = app.add_subcommand("evolve", "One data-evolution pass");
  std::string ev_dataset, ev_out = "evolved.jsonl", ev_backend = "oracle";
  std::string ev_report, ev_assets = "assets", ev_transcripts, ev_templates;
  uint64_t ev_seed = 1;
  evolve_cmd->add_option("--dataset", ev_dataset, "Input JSONL")->required();
  evolve_cmd->add_option("--out", ev_out, "Output JSONL");
  evolve_cmd->add_option("--solver", ev_backend, "sim|oracle|http");
  evolve_cmd->add_option("--seed", ev_seed, "RNG seed");
  evolve_cmd->add_option("--report", ev_report, "Evolve report JSON path");
  evolve_cmd->add_option("--assets", ev_assets, "SVG assets directory");
  evolve_cmd->add_option("--transcripts", ev_transcripts,
                         "Solver transcript JSONL path");
  evolve_cmd->add_option("--templates", ev_templates,
                         "Template registry JSON path");

  // filter
  auto* filter_cmd =
      app.add_subcommand("filter", "Error-rate estimation and selection");
  std::string fl_dataset, fl_backend = "sim", fl_out = "filtered.jsonl";
  std::string fl_report, fl_transcripts;
  int fl_k = 32, fl_iteration = 1;
  double fl_threshold = 0.3, fl_p0 = 0.5, fl_delta = 0.0, fl_slope = 0.0;
  uint64_t fl_seed = 1;
  filter_cmd->add_option("--dataset", fl_dataset, "Input JSONL")->required();
  filter_cmd->add_option("--solver", fl_backend, "sim|oracle|http");
  filter_cmd->add_option("--k", fl_k, "Forwards per sample");
  filter_cmd->add_option("--threshold", fl_threshold, "Error-rate threshold");
  filter_cmd->add_option("--seed", fl_seed, "RNG seed");
  filter_cmd->add_option("--out", fl_out, "Retained records JSONL");
  filter_cmd->add_option("--report", fl_report, "Filter report JSON");
  filter_cmd->add_option("--p0", fl_p0, "Simulated base success probability");
  filter_cmd->add_option("--delta", fl_delta, "Simulated per-iteration gain");
  filter_cmd->add_option("--slope", fl_slope, "Simulated difficulty slope");
  filter_cmd->add_option("--iteration", fl_iteration, "Solver iteration tag");
  filter_cmd->add_option("--transcripts", fl_transcripts,
                         "Solver transcript JSONL path");

  // loop
  auto* loop_cmd = app.add_subcommand("loop", "Run the full closed loop");
  int loop_iterations = 3;
  std::string loop_config, loop_dataset, loop_out;
  uint64_t loop_seed = 1;
  bool loop_transcripts = false;
  loop_cmd->add_option("--iterations", loop_iterations, "Iteration count T");
  loop_cmd->add_option("--config", loop_config, "TOML config path");
  loop_cmd->add_option("--seed", loop_seed, "Root seed");
  loop_cmd->add_option("--dataset", loop_dataset, "Seed dataset JSONL");
  loop_cmd->add_option("--out", loop_out, "Output directory");
  loop_cmd->add_flag("--transcripts", loop_transcripts,
                     "Persist solver transcripts");

  // grpo-demo
  auto* demo_cmd =
      app.add_subcommand("grpo-demo", "Optimize the toy policy in isolation");
  int demo_steps = 50, demo_group = 8;
  double demo_eps = 0.2, demo_beta = 0.0, demo_lr = 0.5;
  uint64_t demo_seed = 1;
  std::string demo_metrics;
  demo_cmd->add_option("--steps", demo_steps, "Gradient steps");
  demo_cmd->add_option("--group-size", demo_group, "Rollouts per question");
  demo_cmd->add_option("--epsilon", demo_eps, "Clip range");
  demo_cmd->add_option("--beta", demo_beta, "KL coefficient");
  demo_cmd->add_option("--lr", demo_lr, "Learning rate");
  demo_cmd->add_option("--seed", demo_seed, "RNG seed");
  demo_cmd->add_option("--metrics", demo_metrics, "Metrics JSONL path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*seed_cmd) return cmd_seed(seed_out, seed_count, seed_value);
    if (*render_cmd) return cmd_render(render_spec, render_out);
    if (*stats_cmd) return cmd_stats(stats_dataset);
    if (*evolve_cmd)
      return cmd_evolve(ev_dataset, ev_out, ev_backend, ev_seed, ev_report,
                        ev_assets, ev_transcripts, ev_templates);
    if (*filter_cmd)
      return cmd_filter(fl_dataset, fl_backend, fl_k, fl_threshold, fl_seed,
                        fl_out, fl_report, fl_p0, fl_delta, fl_slope,
                        fl_iteration, fl_transcripts);
    if (*loop_cmd)
      return cmd_loop(loop_iterations, loop_config, loop_seed, loop_dataset,
                      loop_out, loop_transcripts);
    if (*demo_cmd)
      return cmd_grpo_demo(demo_steps, demo_group, demo_eps, demo_beta,
                           demo_lr, demo_seed, demo_metrics);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
