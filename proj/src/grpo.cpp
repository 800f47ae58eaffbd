#include "geoevo/grpo.hpp"

#include <algorithm>
#include <cmath>

namespace geoevo {

namespace {

Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return logits.array() - lse;
}

// Surrogate term for one rollout and its gradient coefficient w.r.t.
// logp_current. The coefficient is rho*A on the unclipped branch and 0 where
// the clipped branch is active (the clip saturates the derivative).
struct SurrogateTerm {
  double value = 0.0;
  double dlogp_coeff = 0.0;
  bool clipped = false;
};

SurrogateTerm surrogate_term(double logp_current, double logp_old,
                             double advantage, double clip_epsilon) {
  SurrogateTerm t;
  const double rho = std::exp(logp_current - logp_old);
  const double unclipped = rho * advantage;
  const double clipped =
      std::clamp(rho, 1.0 - clip_epsilon, 1.0 + clip_epsilon) * advantage;
  if (unclipped <= clipped) {
    t.value = unclipped;
    t.dlogp_coeff = rho * advantage;
    t.clipped = false;
  } else {
    t.value = clipped;
    t.dlogp_coeff = 0.0;
    t.clipped = true;
  }
  return t;
}

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw GrpoError(std::string(what) + " is not finite");
}

}  // namespace

ToyPolicy::ToyPolicy(Eigen::MatrixXd theta, std::vector<std::string> vocab,
                     int feature_dim)
    : theta_(std::move(theta)), vocab_(std::move(vocab)),
      feature_dim_(feature_dim) {}

ToyPolicy ToyPolicy::uniform(const ToyPolicyConfig& cfg) {
  return ToyPolicy(
      Eigen::MatrixXd::Zero(static_cast<int>(cfg.vocab.size()),
                            cfg.feature_dim),
      cfg.vocab, cfg.feature_dim);
}

ToyPolicy ToyPolicy::seeded(const ToyPolicyConfig& cfg) {
  SplitMix64 rng(mix_seed(cfg.seed, "toy-policy-init"));
  Eigen::MatrixXd theta(static_cast<int>(cfg.vocab.size()), cfg.feature_dim);
  for (int i = 0; i < theta.rows(); ++i)
    for (int j = 0; j < theta.cols(); ++j)
      theta(i, j) = rng.uniform(-cfg.init_scale, cfg.init_scale);
  return ToyPolicy(std::move(theta), cfg.vocab, cfg.feature_dim);
}

Eigen::VectorXd ToyPolicy::context_features(const std::string& question,
                                            int position) const {
  SplitMix64 rng(mix_seed(hash64(question),
                          0x5851f42d4c957f2dull + static_cast<uint64_t>(position)));
  Eigen::VectorXd phi(feature_dim_);
  const double scale = 1.0 / std::sqrt(static_cast<double>(feature_dim_));
  for (int i = 0; i < feature_dim_; ++i)
    phi(i) = rng.uniform(-1.0, 1.0) * scale;
  return phi;
}

Eigen::VectorXd ToyPolicy::log_probs(const std::string& question,
                                     int position) const {
  return log_softmax(theta_ * context_features(question, position));
}

double ToyPolicy::sequence_logprob(const std::string& question,
                                   const std::vector<int>& tokens) const {
  double total = 0.0;
  for (size_t k = 0; k < tokens.size(); ++k) {
    if (tokens[k] < 0 || tokens[k] >= vocab_size())
      throw GrpoError("token index out of vocabulary");
    total += log_probs(question, static_cast<int>(k))(tokens[k]);
  }
  return total;
}

std::pair<double, Eigen::MatrixXd> ToyPolicy::sequence_logprob_grad(
    const std::string& question, const std::vector<int>& tokens) const {
  double total = 0.0;
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(theta_.rows(), theta_.cols());
  for (size_t k = 0; k < tokens.size(); ++k) {
    if (tokens[k] < 0 || tokens[k] >= vocab_size())
      throw GrpoError("token index out of vocabulary");
    const Eigen::VectorXd phi = context_features(question, static_cast<int>(k));
    const Eigen::VectorXd logp = log_softmax(theta_ * phi);
    total += logp(tokens[k]);
    Eigen::VectorXd coeff = -logp.array().exp();
    coeff(tokens[k]) += 1.0;
    grad.noalias() += coeff * phi.transpose();
  }
  return {total, std::move(grad)};
}

std::vector<int> ToyPolicy::encode(const std::string& text) const {
  std::vector<int> out;
  out.reserve(text.size());
  for (char c : text) {
    const std::string s(1, c);
    const auto it = std::find(vocab_.begin(), vocab_.end(), s);
    if (it == vocab_.end())
      throw GrpoError("out-of-vocabulary token '" + s + "'");
    out.push_back(static_cast<int>(it - vocab_.begin()));
  }
  return out;
}

std::string ToyPolicy::decode(const std::vector<int>& tokens) const {
  std::string out;
  for (int t : tokens) {
    if (t < 0 || t >= vocab_size())
      throw GrpoError("token index out of vocabulary");
    out += vocab_[t];
  }
  return out;
}

std::vector<int> ToyPolicy::sample_sequence(const std::string& question,
                                            int length,
                                            SplitMix64& rng) const {
  std::vector<int> out;
  out.reserve(length);
  for (int k = 0; k < length; ++k) {
    const Eigen::VectorXd p = log_probs(question, k).array().exp();
    double u = rng.uniform();
    int token = vocab_size() - 1;
    for (int i = 0; i < vocab_size(); ++i) {
      u -= p(i);
      if (u < 0.0) {
        token = i;
        break;
      }
    }
    out.push_back(token);
  }
  return out;
}

nlohmann::json ToyPolicy::to_json() const {
  nlohmann::json j;
  j["vocab"] = vocab_;
  j["feature_dim"] = feature_dim_;
  std::vector<double> flat(theta_.size());
  Eigen::Map<Eigen::MatrixXd>(flat.data(), theta_.rows(), theta_.cols()) =
      theta_;
  j["theta"] = flat;
  return j;
}

ToyPolicy ToyPolicy::from_json(const nlohmann::json& j) {
  const auto vocab = j.at("vocab").get<std::vector<std::string>>();
  const int feature_dim = j.at("feature_dim").get<int>();
  const auto flat = j.at("theta").get<std::vector<double>>();
  if (flat.size() != vocab.size() * static_cast<size_t>(feature_dim))
    throw GrpoError("theta size does not match vocab x feature_dim");
  Eigen::MatrixXd theta(static_cast<int>(vocab.size()), feature_dim);
  theta = Eigen::Map<const Eigen::MatrixXd>(
      flat.data(), static_cast<int>(vocab.size()), feature_dim);
  return ToyPolicy(std::move(theta), vocab, feature_dim);
}

Eigen::VectorXd RolloutGroup::rewards() const {
  Eigen::VectorXd r(size());
  for (int i = 0; i < size(); ++i) r(i) = rollouts[i].reward;
  return r;
}

int GrpoHyperparams::group_size_for(int iteration) const {
  if (group_size_schedule.empty()) return 8;
  const size_t idx = std::min<size_t>(
      std::max(iteration - 1, 0), group_size_schedule.size() - 1);
  return group_size_schedule[idx];
}

Eigen::VectorXd compute_group_advantages(const Eigen::VectorXd& rewards) {
  if (rewards.size() == 0)
    throw GrpoError("cannot compute advantages of an empty group");
  const double mean = rewards.mean();
  const double var = (rewards.array() - mean).square().mean();  // population
  const double std_dev = std::sqrt(var);
  if (std_dev <= 1e-8) return Eigen::VectorXd::Zero(rewards.size());
  return (rewards.array() - mean) / std_dev;
}

GrpoLossTerms grpo_loss_terms(const RolloutGroup& group,
                              const Eigen::VectorXd& advantages,
                              const GrpoHyperparams& hp,
                              const Eigen::VectorXd& ref_logps) {
  if (hp.clip_epsilon <= 0.0 || hp.clip_epsilon >= 1.0)
    throw GrpoError("clip range must lie in (0,1)");
  if (hp.kl_beta < 0.0) throw GrpoError("KL coefficient must be >= 0");
  const int n = group.size();
  if (n == 0) throw GrpoError("empty rollout group");
  if (advantages.size() != n)
    throw GrpoError("advantage vector size does not match group size");
  if (hp.kl_beta != 0.0 && ref_logps.size() != n)
    throw GrpoError("reference log-probs size does not match group size");

  GrpoLossTerms terms;
  int clipped = 0;
  for (int i = 0; i < n; ++i) {
    const Rollout& r = group.rollouts[i];
    if (!std::isfinite(r.logp_current) || !std::isfinite(r.logp_old))
      throw GrpoError("non-finite log-probability in rollout group");
    const SurrogateTerm t = surrogate_term(r.logp_current, r.logp_old,
                                           advantages(i), hp.clip_epsilon);
    terms.surrogate += t.value;
    clipped += t.clipped ? 1 : 0;
    if (hp.kl_beta != 0.0) {
      const double delta = ref_logps(i) - r.logp_current;
      terms.kl += std::exp(delta) - delta - 1.0;
    }
  }
  terms.surrogate /= n;
  terms.kl /= n;
  terms.clip_fraction = static_cast<double>(clipped) / n;
  terms.loss = -terms.surrogate + hp.kl_beta * terms.kl;
  return terms;
}

double grpo_loss(const RolloutGroup& group, const Eigen::VectorXd& advantages,
                 const GrpoHyperparams& hp, const Eigen::VectorXd& ref_logps) {
  return grpo_loss_terms(group, advantages, hp, ref_logps).loss;
}

double sft_loss(const ToyPolicy& policy, const std::string& question,
                const std::vector<int>& tokens) {
  if (tokens.empty()) throw GrpoError("empty token sequence");
  return -policy.sequence_logprob(question, tokens) /
         static_cast<double>(tokens.size());
}

namespace {

double max_rel_discrepancy(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double worst = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) {
      const double denom =
          std::max({1e-6, std::fabs(a(i, j)), std::fabs(b(i, j))});
      worst = std::max(worst, std::fabs(a(i, j) - b(i, j)) / denom);
    }
  return worst;
}

Eigen::MatrixXd central_differences(ToyPolicy policy, double h,
                                    const std::function<double(const ToyPolicy&)>& f) {
  Eigen::MatrixXd fd(policy.theta().rows(), policy.theta().cols());
  for (int i = 0; i < fd.rows(); ++i)
    for (int j = 0; j < fd.cols(); ++j) {
      const double saved = policy.theta()(i, j);
      policy.theta()(i, j) = saved + h;
      const double up = f(policy);
      policy.theta()(i, j) = saved - h;
      const double down = f(policy);
      policy.theta()(i, j) = saved;
      fd(i, j) = (up - down) / (2.0 * h);
    }
  return fd;
}

}  // namespace

GradientReport verify_sft_gradients(const ToyPolicy& policy,
                                    const std::string& question,
                                    const std::vector<int>& tokens, double h) {
  GradientReport report;
  const auto [logp, grad] = policy.sequence_logprob_grad(question, tokens);
  (void)logp;
  report.analytic = -grad / static_cast<double>(tokens.size());
  report.finite_difference =
      central_differences(policy, h, [&](const ToyPolicy& p) {
        return sft_loss(p, question, tokens);
      });
  report.max_rel_discrepancy =
      max_rel_discrepancy(report.analytic, report.finite_difference);
  return report;
}

GradientReport verify_grpo_gradients(const ToyPolicy& policy,
                                     const RolloutGroup& group,
                                     const GrpoHyperparams& hp,
                                     const Eigen::VectorXd& ref_logps,
                                     double h, double kink_margin) {
  GradientReport report;
  const Eigen::VectorXd advantages = compute_group_advantages(group.rewards());
  const int n = group.size();

  auto with_current = [&](const ToyPolicy& p) {
    RolloutGroup g = group;
    for (auto& r : g.rollouts)
      r.logp_current = p.sequence_logprob(g.question, r.tokens);
    return g;
  };

  // Analytic gradient; also detect ratios near the clip boundary.
  const RolloutGroup g0 = with_current(policy);
  Eigen::MatrixXd analytic =
      Eigen::MatrixXd::Zero(policy.theta().rows(), policy.theta().cols());
  for (int i = 0; i < n; ++i) {
    const Rollout& r = g0.rollouts[i];
    const double rho = std::exp(r.logp_current - r.logp_old);
    if (std::fabs(rho - (1.0 - hp.clip_epsilon)) < kink_margin ||
        std::fabs(rho - (1.0 + hp.clip_epsilon)) < kink_margin)
      report.at_clip_kink = true;

    const SurrogateTerm t = surrogate_term(r.logp_current, r.logp_old,
                                           advantages(i), hp.clip_epsilon);
    double coeff = -t.dlogp_coeff / n;  // d(-surrogate)/d logp_current
    if (hp.kl_beta != 0.0)
      coeff += hp.kl_beta *
               (1.0 - std::exp(ref_logps(i) - r.logp_current)) / n;
    if (coeff != 0.0) {
      const auto [logp, grad] =
          policy.sequence_logprob_grad(group.question, r.tokens);
      (void)logp;
      analytic.noalias() += coeff * grad;
    }
  }
  report.analytic = std::move(analytic);

  report.finite_difference =
      central_differences(policy, h, [&](const ToyPolicy& p) {
        return grpo_loss(with_current(p), advantages, hp, ref_logps);
      });
  report.max_rel_discrepancy =
      max_rel_discrepancy(report.analytic, report.finite_difference);
  return report;
}

nlohmann::json TrainMetrics::to_json() const {
  return {{"step", step},
          {"mean_reward", mean_reward},
          {"mean_abs_advantage", mean_abs_advantage},
          {"clip_fraction", clip_fraction},
          {"loss", loss}};
}

TrainMetrics grpo_train_step(ToyPolicy& policy,
                             const std::vector<RolloutGroup>& batch,
                             const GrpoHyperparams& hp, int step_index) {
  if (batch.empty()) throw GrpoError("empty batch");

  TrainMetrics metrics;
  metrics.step = step_index;
  Eigen::MatrixXd grad =
      Eigen::MatrixXd::Zero(policy.theta().rows(), policy.theta().cols());
  int total_rollouts = 0;
  int clipped_rollouts = 0;
  double loss_sum = 0.0;

  for (const auto& group_in : batch) {
    RolloutGroup group = group_in;
    Eigen::VectorXd ref_logps(group.size());
    for (int i = 0; i < group.size(); ++i) {
      group.rollouts[i].logp_current =
          policy.sequence_logprob(group.question, group.rollouts[i].tokens);
      ref_logps(i) = group.rollouts[i].logp_old;  // old policy as reference
    }
    const Eigen::VectorXd advantages =
        compute_group_advantages(group.rewards());
    const GrpoLossTerms terms =
        grpo_loss_terms(group, advantages, hp, ref_logps);
    loss_sum += terms.loss;

    const int n = group.size();
    for (int i = 0; i < n; ++i) {
      const Rollout& r = group.rollouts[i];
      metrics.mean_reward += r.reward;
      metrics.mean_abs_advantage += std::fabs(advantages(i));
      const SurrogateTerm t = surrogate_term(r.logp_current, r.logp_old,
                                             advantages(i), hp.clip_epsilon);
      clipped_rollouts += t.clipped ? 1 : 0;
      ++total_rollouts;
      double coeff = -t.dlogp_coeff / n;
      if (hp.kl_beta != 0.0)
        coeff += hp.kl_beta *
                 (1.0 - std::exp(ref_logps(i) - r.logp_current)) / n;
      if (coeff != 0.0) {
        const auto [logp, g] =
            policy.sequence_logprob_grad(group.question, r.tokens);
        (void)logp;
        grad.noalias() += coeff * g;
      }
    }
  }

  grad /= static_cast<double>(batch.size());
  check_finite(grad, "GRPO gradient");
  policy.theta() -= hp.learning_rate * grad;

  metrics.mean_reward /= total_rollouts;
  metrics.mean_abs_advantage /= total_rollouts;
  metrics.clip_fraction =
      static_cast<double>(clipped_rollouts) / total_rollouts;
  metrics.loss = loss_sum / static_cast<double>(batch.size());
  return metrics;
}

TrainMetrics sft_train_step(
    ToyPolicy& policy,
    const std::vector<std::pair<std::string, std::vector<int>>>& batch,
    double learning_rate, int step_index) {
  if (batch.empty()) throw GrpoError("empty batch");

  Eigen::MatrixXd grad =
      Eigen::MatrixXd::Zero(policy.theta().rows(), policy.theta().cols());
  double loss_sum = 0.0;
  for (const auto& [question, tokens] : batch) {
    if (tokens.empty()) throw GrpoError("empty token sequence");
    const auto [logp, g] = policy.sequence_logprob_grad(question, tokens);
    loss_sum += -logp / static_cast<double>(tokens.size());
    grad.noalias() -= g / static_cast<double>(tokens.size());
  }
  grad /= static_cast<double>(batch.size());
  check_finite(grad, "SFT gradient");
  policy.theta() -= learning_rate * grad;

  TrainMetrics metrics;
  metrics.step = step_index;
  metrics.loss = loss_sum / static_cast<double>(batch.size());
  return metrics;
}

RolloutGroup sample_rollout_group(
    const ToyPolicy& policy, const std::string& question, int group_size,
    int length, uint64_t seed,
    const std::function<double(const std::string&)>& reward_fn) {
  RolloutGroup group;
  group.question = question;
  for (int i = 0; i < group_size; ++i) {
    SplitMix64 rng(mix_seed(seed, static_cast<uint64_t>(i)));
    Rollout r;
    r.tokens = policy.sample_sequence(question, length, rng);
    r.logp_old = policy.sequence_logprob(question, r.tokens);
    r.logp_current = r.logp_old;
    r.reward = reward_fn(policy.decode(r.tokens));
    group.rollouts.push_back(std::move(r));
  }
  return group;
}

}  // namespace geoevo
