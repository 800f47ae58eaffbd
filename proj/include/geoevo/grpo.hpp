#pragma once

#include <Eigen/Dense>

#include <functional>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "geoevo/rng.hpp"

namespace geoevo {

class GrpoError : public std::runtime_error {
 public:
  explicit GrpoError(const std::string& what) : std::runtime_error(what) {}
};

struct ToyPolicyConfig {
  std::vector<std::string> vocab = {"0", "1", "2", "3", "4", "5", "6", "7",
                                    "8", "9", ".", "-", "e", "+"};
  int feature_dim = 32;
  double init_scale = 0.1;
  uint64_t seed = 1;
};

// Linear-softmax sequence model over a small closed answer vocabulary: the
// minimum structure on which both the SFT and the clipped-surrogate
// objectives are non-trivially differentiable. Parameters are a dense
// vocab x feature matrix; the context feature map is a deterministic hash of
// (question, position).
class ToyPolicy {
 public:
  static ToyPolicy uniform(const ToyPolicyConfig& cfg = {});
  static ToyPolicy seeded(const ToyPolicyConfig& cfg);

  Eigen::VectorXd context_features(const std::string& question,
                                   int position) const;
  // Log-softmax over the vocabulary at one position; sums to 1 in
  // probability space within 1e-12.
  Eigen::VectorXd log_probs(const std::string& question, int position) const;

  double sequence_logprob(const std::string& question,
                          const std::vector<int>& tokens) const;
  // d logprob / d theta alongside the value.
  std::pair<double, Eigen::MatrixXd> sequence_logprob_grad(
      const std::string& question, const std::vector<int>& tokens) const;

  std::vector<int> encode(const std::string& text) const;  // throws on OOV
  std::string decode(const std::vector<int>& tokens) const;
  std::vector<int> sample_sequence(const std::string& question, int length,
                                   SplitMix64& rng) const;

  int vocab_size() const { return static_cast<int>(vocab_.size()); }
  int feature_dim() const { return feature_dim_; }
  const Eigen::MatrixXd& theta() const { return theta_; }
  Eigen::MatrixXd& theta() { return theta_; }
  const std::vector<std::string>& vocab() const { return vocab_; }

  nlohmann::json to_json() const;
  static ToyPolicy from_json(const nlohmann::json& j);

 private:
  ToyPolicy(Eigen::MatrixXd theta, std::vector<std::string> vocab,
            int feature_dim);

  Eigen::MatrixXd theta_;  // vocab x feature
  std::vector<std::string> vocab_;
  int feature_dim_;
};

struct Rollout {
  std::vector<int> tokens;
  double reward = 0.0;
  double logp_current = 0.0;  // under the policy being optimized
  double logp_old = 0.0;      // under the sampling policy
};

struct RolloutGroup {
  std::string question;
  std::vector<Rollout> rollouts;

  int size() const { return static_cast<int>(rollouts.size()); }
  Eigen::VectorXd rewards() const;
};

struct GrpoHyperparams {
  double clip_epsilon = 0.2;
  double kl_beta = 0.0;  // 0 per the reference configuration
  double learning_rate = 0.5;
  std::vector<int> group_size_schedule = {32, 8};  // 32 first, 8 afterwards

  int group_size_for(int iteration) const;  // iteration is 1-based
};

// Group-relative advantages: (r - mean) / population std. Zero-variance
// groups (std <= 1e-8) get all-zero advantages. Throws on empty input.
Eigen::VectorXd compute_group_advantages(const Eigen::VectorXd& rewards);

struct GrpoLossTerms {
  double loss = 0.0;       // -surrogate + beta * kl
  double surrogate = 0.0;  // mean of min(rho*A, clip(rho)*A)
  double kl = 0.0;         // per-sequence unbiased estimate vs the reference
  double clip_fraction = 0.0;
};

// Clipped sequence-level surrogate with a KL penalty:
//   loss = -mean_i min(rho_i A_i, clip(rho_i, 1-eps, 1+eps) A_i) + beta * KL
// rho_i = exp(logp_current_i - logp_old_i). The KL uses the unbiased
// estimator mean_i[exp(lr - lc) - (lr - lc) - 1] against ref_logps.
GrpoLossTerms grpo_loss_terms(const RolloutGroup& group,
                              const Eigen::VectorXd& advantages,
                              const GrpoHyperparams& hp,
                              const Eigen::VectorXd& ref_logps);
double grpo_loss(const RolloutGroup& group, const Eigen::VectorXd& advantages,
                 const GrpoHyperparams& hp, const Eigen::VectorXd& ref_logps);

// Mean per-token negative log-likelihood of the sequence given the question.
double sft_loss(const ToyPolicy& policy, const std::string& question,
                const std::vector<int>& tokens);

struct GradientReport {
  Eigen::MatrixXd analytic;
  Eigen::MatrixXd finite_difference;
  double max_rel_discrepancy = 0.0;
  bool at_clip_kink = false;  // instance touches a clip boundary; excluded
};

GradientReport verify_sft_gradients(const ToyPolicy& policy,
                                    const std::string& question,
                                    const std::vector<int>& tokens,
                                    double h = 1e-5);

// `group` supplies tokens, rewards and logp_old; logp_current is recomputed
// from the policy inside the loss. Instances with any ratio within
// `kink_margin` of a clip boundary are flagged and should be excluded from
// agreement checks (the surrogate is non-smooth there).
GradientReport verify_grpo_gradients(const ToyPolicy& policy,
                                     const RolloutGroup& group,
                                     const GrpoHyperparams& hp,
                                     const Eigen::VectorXd& ref_logps,
                                     double h = 1e-5,
                                     double kink_margin = 1e-3);

struct TrainMetrics {
  int step = 0;
  double mean_reward = 0.0;
  double mean_abs_advantage = 0.0;
  double clip_fraction = 0.0;
  double loss = 0.0;

  nlohmann::json to_json() const;
};

// One GRPO gradient step over the batch (fixed-order reduction). logp_old in
// the rollouts must come from the sampling-time policy; logp_current is
// recomputed here. Throws on non-finite gradients.
TrainMetrics grpo_train_step(ToyPolicy& policy,
                             const std::vector<RolloutGroup>& batch,
                             const GrpoHyperparams& hp, int step_index = 0);

// One SFT gradient step over (question, token sequence) pairs.
TrainMetrics sft_train_step(
    ToyPolicy& policy,
    const std::vector<std::pair<std::string, std::vector<int>>>& batch,
    double learning_rate, int step_index = 0);

// Samples `group_size` sequences of `length` tokens and scores each decoded
// string with `reward_fn`. Deterministic in (policy, question, seed).
RolloutGroup sample_rollout_group(
    const ToyPolicy& policy, const std::string& question, int group_size,
    int length, uint64_t seed,
    const std::function<double(const std::string&)>& reward_fn);

}  // namespace geoevo
