#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "geoevo/dataset.hpp"
#include "geoevo/geometry.hpp"

namespace geoevo {

enum class SolverBackend { Http, Oracle, Simulated };

struct RetryPolicy {
  int max_attempts = 3;
  int initial_backoff_ms = 1000;
  double backoff_factor = 2.0;
};

// Simulated solver skill: p(correct) = clamp(base + gain*iteration -
// slope*difficulty). The stand-in for a policy whose capability grows
// across loop iterations.
struct SkillProfile {
  double base_success = 1.0;     // p0 in [0,1]
  double difficulty_slope = 0.0; // >= 0
  double iteration_gain = 0.0;   // >= 0, per iteration

  double effective(int iteration, int difficulty) const;
};

struct SolverConfig {
  SolverBackend backend = SolverBackend::Oracle;
  std::string api_base;  // http backend, e.g. "http://localhost:8080/v1"
  std::string api_key;
  std::string model = "local";
  double temperature = 0.9;
  int max_in_flight = 4;
  int timeout_sec = 30;
  RetryPolicy retry;
  uint64_t seed = 0;       // simulated backend
  SkillProfile skill;      // simulated backend
  int skill_iteration = 0; // simulated backend, current loop iteration

  // Applies SOLVER_API_BASE / SOLVER_API_KEY / SOLVER_MODEL when set.
  static SolverConfig with_env(SolverConfig base);
};

struct SolverResponse {
  std::string raw;
  std::optional<std::string> extracted;  // canonical numeric string
  double latency_ms = 0.0;
  std::string backend_id;
  int attempt = 0;
};

struct AuxiliaryProposal {
  std::vector<AuxiliaryCommand> commands;
  std::string thought;
  std::vector<std::string> dropped;  // rejected proposals, with reasons
};

// Transport-level failure (connection, timeout, malformed payload) after all
// retries. Deliberately distinct from a wrong answer.
class TransportError : public std::runtime_error {
 public:
  explicit TransportError(const std::string& what)
      : std::runtime_error(what) {}
};

class SolverGateway {
 public:
  explicit SolverGateway(SolverConfig cfg);
  ~SolverGateway();

  SolverGateway(const SolverGateway&) = delete;
  SolverGateway& operator=(const SolverGateway&) = delete;

  // One forward pass. `attempt` keys the simulated backend's randomness:
  // (seed, sample id, attempt) fully determines the outcome, so repeated and
  // concurrent calls reproduce bit-identically.
  SolverResponse answer(const SampleRecord& sample, int attempt = 0) const;

  // Proposes auxiliary constructions for the diagram. Every command is
  // validated against `d` by a dry run before it is returned; invalid
  // proposals are dropped and reported. The oracle and simulated backends use
  // the rule-based proposer; the http backend asks the remote model.
  AuxiliaryProposal propose_auxiliary(const Diagram& d,
                                      const std::string& question) const;

  // Current loop iteration for the simulated skill model.
  void set_skill_iteration(int t);

  // Appends request/response records to `path` as JSONL.
  void enable_transcripts(const std::string& path);

  const SolverConfig& config() const { return cfg_; }
  std::string model_tag() const;

 private:
  struct Impl;
  SolverConfig cfg_;
  std::unique_ptr<Impl> impl_;
};

// Rule-based proposer shared by the oracle and simulated backends; exposed
// for tests. Returns at most one command per call.
AuxiliaryProposal propose_by_rules(const Diagram& d);

const char* to_string(SolverBackend b);
SolverBackend solver_backend_from(const std::string& name);

}  // namespace geoevo
