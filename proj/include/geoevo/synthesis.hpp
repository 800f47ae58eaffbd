#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "geoevo/formal.hpp"
#include "geoevo/geometry.hpp"
#include "geoevo/solver.hpp"

namespace geoevo {

enum class Principle { GeometricConstraints, NewTheorems, BackwardReasoning };

class SynthesisError : public std::runtime_error {
 public:
  explicit SynthesisError(const std::string& what)
      : std::runtime_error(what) {}
};

// The diagram cannot support m_range.min sub-problems; the caller should
// evolve it further before retrying.
class TooSimpleError : public SynthesisError {
 public:
  explicit TooSimpleError(const std::string& what) : SynthesisError(what) {}
};

// No pair of sub-problems can be chained.
class CompositionError : public SynthesisError {
 public:
  explicit CompositionError(const std::string& what) : SynthesisError(what) {}
};

// Atomic question about one quantity of the diagram. `target_key` names that
// quantity in the oracle query language (evaluate_quantity); `input_keys`
// name the quantities the question's givens were read from, which is what
// composition chains on.
struct SubProblem {
  int id = 0;
  std::string template_id;
  Principle principle = Principle::GeometricConstraints;
  std::string question;          // standalone form with numeric givens
  std::string chained_question;  // form referring to the previous result
  std::string statement;         // short name used in reasoning steps
  std::string answer;            // canonical numeric string
  std::string unit;              // "" or "deg"
  std::string target_key;
  std::vector<std::string> input_keys;
  std::optional<int> depends_on;
  std::vector<int> facts_used;   // indices into the FormalDescription
  std::vector<std::string> labels_used;
};

struct ComposedProblem {
  std::string question;
  std::string ground_truth;      // canonical numeric string
  std::string reasoning_trace;   // "Step 1: ... Step 2: ..."
  std::vector<int> component_ids;
  std::vector<SubProblem> components;  // chain members, in chain order
  int difficulty = 0;            // auxiliary count + chain length
  int chain_length = 0;
  std::string terminal_key;
  FormalDescription description;  // facts the components rely on
  std::vector<std::string> labels_used;
};

struct SynthesisConfig {
  int m_min = 4;
  int m_max = 10;
  std::set<Principle> principles = {Principle::GeometricConstraints,
                                    Principle::NewTheorems,
                                    Principle::BackwardReasoning};
  std::set<std::string> enabled_templates;  // empty = all
  int consistency_attempts = 3;
};

struct ConsistencyDecision {
  bool keep = false;
  std::vector<SolverResponse> attempts;
  std::string reason;
};

struct AlignmentDecision {
  bool keep = false;
  std::vector<std::string> reasons;
};

// Evaluates a quantity key ("dist:A:B", "angle:A:B:C", "area:...",
// "perim:...", "rad:O", "arc:O:P:Q", "linedist:P:A:B", "dirangle:A:B:C:D")
// against the diagram. The single oracle route all answers flow through.
double evaluate_quantity(const Diagram& d, const std::string& key);

// Between cfg.m_min and cfg.m_max principle-tagged sub-problems, each with an
// oracle-verified answer. Throws TooSimpleError when the description cannot
// support m_min of them. Deterministic in (f, d, cfg, seed).
std::vector<SubProblem> generate_subproblems(const FormalDescription& f,
                                             const Diagram& d,
                                             const SynthesisConfig& cfg,
                                             uint64_t seed);

// Chains sub-problems into one multi-step question. Ground truth is the
// terminal sub-problem's oracle value; the trace numbers one step per chain
// member. Throws CompositionError when no dependency chain of length >= 2
// exists.
ComposedProblem compose_problem(const std::vector<SubProblem>& subs,
                                uint64_t seed, int aux_count,
                                const FormalDescription& description);

// Keep iff all attempts extract mutually equal answers (canonical numeric
// comparison). Transport failures propagate as TransportError — retryable,
// never a drop.
ConsistencyDecision consistency_filter(const ComposedProblem& p,
                                       const SolverGateway& gateway,
                                       int n_attempts = 3);

// Keep iff every fact the problem relies on holds in `d` within tolerance and
// every referenced label resolves.
AlignmentDecision alignment_filter(const ComposedProblem& p, const Diagram& d);

// Whitespace-token count of the reasoning trace.
int reasoning_length(const ComposedProblem& p);

// Template registry file: JSON mapping principle names to template id lists.
// Unknown ids or principles are rejected.
std::set<std::string> load_template_registry(const std::string& path);

const std::set<std::string>& all_template_ids();
const char* to_string(Principle p);
Principle principle_from(const std::string& name);

}  // namespace geoevo
