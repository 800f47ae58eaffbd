#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geoevo/config.hpp"
#include "geoevo/dataset.hpp"
#include "geoevo/filter.hpp"
#include "geoevo/grpo.hpp"
#include "geoevo/solver.hpp"
#include "geoevo/synthesis.hpp"

namespace geoevo {

class OrchestratorError : public std::runtime_error {
 public:
  explicit OrchestratorError(const std::string& what)
      : std::runtime_error(what) {}
};

enum class IterationMode { SftThenRl, RlOnly };
enum class WarmStart { PreviousRl, Initial };
enum class DatasetScope { CurrentOnly, Cumulative };

struct SchedulePlan {
  int total_iterations = 3;
  // Iteration 1 always runs SFT+RL (the warm-up); later iterations follow
  // later_mode, warm-started per warm_start.
  IterationMode later_mode = IterationMode::RlOnly;
  WarmStart warm_start = WarmStart::PreviousRl;
  DatasetScope scope = DatasetScope::CurrentOnly;
  bool accumulate = true;  // evolved pool keeps prior samples

  IterationMode mode_for(int iteration) const {
    return iteration <= 1 ? IterationMode::SftThenRl : later_mode;
  }
};

struct TrainJobSpec {
  std::string phase;  // "sft" | "rl"
  std::string dataset_path;
  double learning_rate = 1e-5;  // 1e-5 sft / 1e-6 rl
  int epochs = 2;
  int batch_size = 128;
  int group_size = 8;           // rl only
  double clip_epsilon = 0.2;    // rl only
  double kl_beta = 0.0;         // rl only
  double temperature = 0.9;     // rl only
  std::string warm_start_checkpoint;

  nlohmann::json to_json() const;
};

struct IterationStats {
  int record_count = 0;
  int new_count = 0;
  int retained = 0;
  int unevaluated = 0;
  double mean_reasoning_tokens = 0.0;
  double mean_aux_count = 0.0;
  double mean_difficulty = 0.0;

  nlohmann::json to_json() const;
  static IterationStats from_json(const nlohmann::json& j);
};

struct IterationManifest {
  int iteration = 0;
  std::string input_dataset;
  std::string evolved_dataset;
  std::string train_dataset;
  std::string filter_report;
  std::string schedule_mode;  // "sft+rl" | "rl-only"
  std::string warm_start;     // "previous-rl" | "initial"
  std::string sft_checkpoint; // empty in rl-only iterations
  std::string rl_checkpoint;
  IterationStats stats;
  std::string timestamp;

  nlohmann::json to_json() const;
  static IterationManifest from_json(const nlohmann::json& j);
};

struct EvolveEntry {
  std::string sample_id;
  std::string outcome;  // evolved | too-simple | no-proposal | inconsistent |
                        // misaligned | not-composable | construction-failed
  std::string detail;
  std::string new_id;   // set when outcome == evolved
};

struct EvolveReport {
  std::vector<EvolveEntry> entries;
  int evolved = 0;
  int passed_through = 0;

  nlohmann::json to_json() const;
};

struct EvolveResult {
  std::vector<SampleRecord> dataset;  // evolved pool (per accumulate flag)
  std::vector<SampleRecord> created; // just the new records
  EvolveReport report;
};

struct ToyTrainConfig {
  int sft_steps = 60;
  int rl_steps = 25;
  double sft_learning_rate = 2.0;
  ToyPolicyConfig policy;
};

struct LoopConfig {
  std::string out_dir = "runs/loop";
  std::string seed_dataset;
  uint64_t root_seed = 1;
  SolverConfig evolve_solver;  // oracle by default
  SolverConfig filter_solver;  // the capability being tracked
  SynthesisConfig synthesis;
  SelectionPolicy selection;
  GrpoHyperparams grpo;
  RewardConfig reward;
  ToyTrainConfig train;
  bool external_training = false;  // emit TrainJobSpec files instead
  std::string transcripts_path;    // empty = disabled

  static LoopConfig from_toml(const TomlTable& t);
};

// One cross-modal evolution pass over the input samples:
// propose -> apply -> describe -> sub-problems -> compose -> consistency ->
// alignment. Survivors become records with iteration+1 provenance; samples
// whose diagrams are too simple pass through unchanged with a report entry.
// Deterministic in (input, gateway config, cfg, seed).
EvolveResult evolve_dataset(const std::vector<SampleRecord>& input,
                            const SolverGateway& gateway,
                            const SynthesisConfig& cfg, uint64_t seed,
                            int iteration, const std::string& assets_dir,
                            bool accumulate);

IterationManifest run_iteration(int t,
                                const std::vector<IterationManifest>& history,
                                const SchedulePlan& plan,
                                const LoopConfig& cfg);

// Runs iterations 1..T, resuming past completed ones when their manifests
// already exist in cfg.out_dir. T = 0 returns an empty list without side
// effects.
std::vector<IterationManifest> run_loop(const SchedulePlan& plan,
                                        const LoopConfig& cfg);

struct DatasetStats {
  int count = 0;
  double mean_reasoning_tokens = 0.0;
  int min_reasoning_tokens = 0;
  int max_reasoning_tokens = 0;
  double mean_aux_count = 0.0;
  double mean_difficulty = 0.0;
  std::map<std::string, int> principle_usage;
  std::map<std::string, int> status_counts;
  std::vector<std::string> malformed;  // "line N: reason" entries

  nlohmann::json to_json() const;
};

DatasetStats dataset_stats(const std::vector<SampleRecord>& records);
DatasetStats dataset_stats_file(const std::string& path);

SchedulePlan schedule_plan_from(const TomlTable& t, int total_iterations);

const char* to_string(IterationMode m);
const char* to_string(WarmStart w);
const char* to_string(DatasetScope s);

}  // namespace geoevo
