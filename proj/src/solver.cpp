#include "geoevo/solver.hpp"

#include <httplib.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

#include "geoevo/formal.hpp"
#include "geoevo/numeric.hpp"
#include "geoevo/reward.hpp"
#include "geoevo/rng.hpp"

namespace geoevo {

namespace {

using nlohmann::json;

constexpr char kAnswerSystemPrompt[] =
    "You solve plane geometry problems. Reply with exactly one "
    "<think>...</think> block containing numbered steps (Step 1:, Step 2:, "
    "...) followed by exactly one <answer>...</answer> block containing only "
    "the final numeric value.";

constexpr char kProposeSystemPrompt[] =
    "You add auxiliary constructions to plane geometry figures. Reply with a "
    "JSON array of commands, each {\"kind\": one of connect | "
    "perpendicular-foot | parallel-through | midpoint | "
    "extend-to-intersection, \"args\": [point labels], \"new_label\": "
    "string}. Reply with [] if no construction helps.";

// Bounded in-flight counter for the http backend.
class InFlightGuard {
 public:
  class Token {
   public:
    explicit Token(InFlightGuard& g) : guard_(g) { guard_.acquire(); }
    ~Token() { guard_.release(); }
    Token(const Token&) = delete;
    Token& operator=(const Token&) = delete;

   private:
    InFlightGuard& guard_;
  };

  explicit InFlightGuard(int limit) : limit_(std::max(1, limit)) {}

  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [this] { return active_ < limit_; });
    ++active_;
  }

  void release() {
    {
      std::lock_guard lock(mu_);
      --active_;
    }
    cv_.notify_one();
  }

 private:
  int limit_;
  int active_ = 0;
  std::mutex mu_;
  std::condition_variable cv_;
};

std::string wrong_answer_for(const std::string& ground_truth) {
  const auto v = parse_number(ground_truth);
  return canonical_number(v.value_or(0.0) + 1.0);
}

bool lies_on_line(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  if (ab.norm() < 1e-12) return false;
  return std::fabs(cross2(ab, p - a)) / ab.norm() < 1e-9;
}

std::vector<std::array<std::string, 3>> detect_triangles(const Diagram& d) {
  std::vector<std::string> labels;
  for (const auto& p : d.points) labels.push_back(p.label);
  std::sort(labels.begin(), labels.end());
  std::vector<std::array<std::string, 3>> out;
  for (size_t i = 0; i < labels.size(); ++i)
    for (size_t j = i + 1; j < labels.size(); ++j)
      for (size_t k = j + 1; k < labels.size(); ++k) {
        if (!d.has_segment(labels[i], labels[j]) ||
            !d.has_segment(labels[j], labels[k]) ||
            !d.has_segment(labels[i], labels[k]))
          continue;
        if (lies_on_line(d.at(labels[k]), d.at(labels[i]), d.at(labels[j])))
          continue;
        out.push_back({labels[i], labels[j], labels[k]});
      }
  return out;
}

struct SplitUrl {
  std::string host;  // scheme://authority
  std::string path;  // path prefix, "" or "/v1"
};

SplitUrl split_api_base(const std::string& base) {
  SplitUrl out;
  const size_t scheme = base.find("://");
  const size_t path_start =
      scheme == std::string::npos ? base.find('/') : base.find('/', scheme + 3);
  if (path_start == std::string::npos) {
    out.host = base;
  } else {
    out.host = base.substr(0, path_start);
    out.path = base.substr(path_start);
    while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  }
  return out;
}

// POSTs a chat request with retries; throws TransportError when the endpoint
// stays unreachable or keeps answering with a malformed payload.
std::string chat_completion(const SolverConfig& cfg, const std::string& system,
                            const std::string& user) {
  if (cfg.api_base.empty())
    throw TransportError("http backend requires api_base (SOLVER_API_BASE)");

  const SplitUrl url = split_api_base(cfg.api_base);
  const json body = {{"model", cfg.model},
                     {"temperature", cfg.temperature},
                     {"messages",
                      {{{"role", "system"}, {"content", system}},
                       {{"role", "user"}, {"content", user}}}}};

  std::string last_error;
  int backoff_ms = cfg.retry.initial_backoff_ms;
  for (int attempt = 0; attempt < std::max(1, cfg.retry.max_attempts);
       ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
      backoff_ms = static_cast<int>(backoff_ms * cfg.retry.backoff_factor);
    }
    httplib::Client client(url.host);
    client.set_connection_timeout(cfg.timeout_sec, 0);
    client.set_read_timeout(cfg.timeout_sec, 0);
    httplib::Headers headers;
    if (!cfg.api_key.empty())
      headers.emplace("Authorization", "Bearer " + cfg.api_key);

    auto res = client.Post(url.path + "/chat/completions", headers,
                           body.dump(), "application/json");
    if (!res) {
      last_error = "connection failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "http status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw TransportError("http status " + std::to_string(res->status) +
                           ": " + res->body);
    try {
      const json payload = json::parse(res->body);
      return payload.at("choices").at(0).at("message").at("content")
          .get<std::string>();
    } catch (const std::exception& e) {
      last_error = std::string("malformed payload: ") + e.what();
      continue;
    }
  }
  throw TransportError("chat completion failed after " +
                       std::to_string(cfg.retry.max_attempts) +
                       " attempts: " + last_error);
}

std::string answer_user_prompt(const SampleRecord& sample) {
  std::string prompt;
  try {
    const FormalDescription f =
        emit_formal_description(sample.diagram(), sample.id);
    prompt = "Figure: " + f.to_text() + "\n";
  } catch (const std::exception&) {
    // samples without a parsable diagram still carry a question
  }
  prompt += "Question: " + sample.question;
  return prompt;
}

AuxiliaryKind auxiliary_kind_from(const std::string& s) {
  if (s == "connect") return AuxiliaryKind::Connect;
  if (s == "perpendicular-foot") return AuxiliaryKind::PerpendicularFoot;
  if (s == "parallel-through") return AuxiliaryKind::ParallelThrough;
  if (s == "midpoint") return AuxiliaryKind::Midpoint;
  if (s == "extend-to-intersection") return AuxiliaryKind::ExtendToIntersection;
  throw DiagramError("unknown auxiliary kind '" + s + "'");
}

}  // namespace

double SkillProfile::effective(int iteration, int difficulty) const {
  const double p = base_success + iteration_gain * iteration -
                   difficulty_slope * difficulty;
  return std::clamp(p, 0.0, 1.0);
}

SolverConfig SolverConfig::with_env(SolverConfig base) {
  if (const char* v = std::getenv("SOLVER_API_BASE")) base.api_base = v;
  if (const char* v = std::getenv("SOLVER_API_KEY")) base.api_key = v;
  if (const char* v = std::getenv("SOLVER_MODEL")) base.model = v;
  return base;
}

struct SolverGateway::Impl {
  InFlightGuard in_flight;
  std::mutex transcript_mu;
  std::ofstream transcript;

  explicit Impl(int limit) : in_flight(limit) {}

  void log(const json& entry) {
    std::lock_guard lock(transcript_mu);
    if (transcript.is_open()) transcript << entry.dump() << "\n" << std::flush;
  }
};

SolverGateway::SolverGateway(SolverConfig cfg)
    : cfg_(std::move(cfg)), impl_(std::make_unique<Impl>(cfg_.max_in_flight)) {
  if (cfg_.temperature < 0.0)
    throw std::invalid_argument("temperature must be >= 0");
}

SolverGateway::~SolverGateway() = default;

void SolverGateway::set_skill_iteration(int t) { cfg_.skill_iteration = t; }

void SolverGateway::enable_transcripts(const std::string& path) {
  std::lock_guard lock(impl_->transcript_mu);
  impl_->transcript.open(path, std::ios::app);
}

std::string SolverGateway::model_tag() const {
  switch (cfg_.backend) {
    case SolverBackend::Oracle:
      return "oracle";
    case SolverBackend::Simulated:
      return "sim-it" + std::to_string(cfg_.skill_iteration);
    case SolverBackend::Http:
      return "http:" + cfg_.model;
  }
  return "?";
}

SolverResponse SolverGateway::answer(const SampleRecord& sample,
                                     int attempt) const {
  const auto t0 = std::chrono::steady_clock::now();
  SolverResponse resp;
  resp.attempt = attempt;
  resp.backend_id = model_tag();

  switch (cfg_.backend) {
    case SolverBackend::Oracle: {
      const std::string think =
          sample.reasoning.empty() ? "Step 1: read the value from the figure."
                                   : sample.reasoning;
      resp.raw = wrap_response(think, sample.ground_truth);
      break;
    }
    case SolverBackend::Simulated: {
      const uint64_t draw_seed =
          mix_seed(mix_seed(cfg_.seed, hash64(sample.id)),
                   static_cast<uint64_t>(attempt));
      SplitMix64 rng(draw_seed);
      const double p =
          cfg_.skill.effective(cfg_.skill_iteration, sample.difficulty);
      const bool correct = rng.uniform() < p;
      const std::string value =
          correct ? sample.ground_truth : wrong_answer_for(sample.ground_truth);
      resp.raw =
          wrap_response("Step 1: the requested value is " + value + ".", value);
      break;
    }
    case SolverBackend::Http: {
      InFlightGuard::Token token(impl_->in_flight);
      resp.raw = chat_completion(cfg_, kAnswerSystemPrompt,
                                 answer_user_prompt(sample));
      break;
    }
  }

  // Extraction happens gateway-side; remote self-reports are never trusted.
  const ParsedResponse parsed = parse_response(resp.raw);
  resp.extracted = parsed.extracted;
  resp.latency_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();

  impl_->log({{"type", "answer"},
              {"sample", sample.id},
              {"attempt", attempt},
              {"backend", resp.backend_id},
              {"raw", resp.raw},
              {"extracted", resp.extracted ? json(*resp.extracted) : json()}});
  return resp;
}

AuxiliaryProposal propose_by_rules(const Diagram& d) {
  AuxiliaryProposal out;

  // Rule 1: drop a perpendicular from the vertex opposite the longest side of
  // the first triangle that has no altitude yet.
  for (const auto& tri : detect_triangles(d)) {
    double best_len = -1.0;
    std::string apex, sa, sb;
    for (int i = 0; i < 3; ++i) {
      const std::string& a = tri[i];
      const std::string& b = tri[(i + 1) % 3];
      const std::string& c = tri[(i + 2) % 3];
      const double len = (d.at(a) - d.at(b)).norm();
      if (len > best_len) {
        best_len = len;
        apex = c;
        sa = a;
        sb = b;
      }
    }
    bool has_altitude = false;
    for (const auto& con : d.constraints) {
      if (con.kind != ConstraintKind::Perpendicular) continue;
      const auto& ar = con.args;
      if (ar.size() == 4 && ar[0] == apex &&
          ((ar[2] == sa && ar[3] == sb) || (ar[2] == sb && ar[3] == sa)))
        has_altitude = true;
    }
    if (has_altitude) continue;
    if (lies_on_line(d.at(apex), d.at(sa), d.at(sb))) continue;
    AuxiliaryCommand cmd;
    cmd.kind = AuxiliaryKind::PerpendicularFoot;
    cmd.args = {apex, sa, sb};
    cmd.new_label = fresh_label(d);
    out.commands.push_back(cmd);
    out.thought = "Thought: construction needed; drop a perpendicular from " +
                  apex + " to " + sa + sb + ".";
    return out;
  }

  // Rule 2: connect the first unconnected, non-collinear pair of points.
  std::vector<std::string> labels;
  for (const auto& p : d.points) labels.push_back(p.label);
  std::sort(labels.begin(), labels.end());
  for (size_t i = 0; i < labels.size(); ++i)
    for (size_t j = i + 1; j < labels.size(); ++j) {
      if (d.has_segment(labels[i], labels[j])) continue;
      if ((d.at(labels[i]) - d.at(labels[j])).norm() < 1e-9) continue;
      bool collinear_with_existing = false;
      for (const auto& p : d.primitives) {
        if (p.kind == PrimitiveKind::Circle) continue;
        if (lies_on_line(d.at(labels[i]), d.at(p.args[0]), d.at(p.args[1])) &&
            lies_on_line(d.at(labels[j]), d.at(p.args[0]), d.at(p.args[1]))) {
          collinear_with_existing = true;
          break;
        }
      }
      if (collinear_with_existing) continue;
      AuxiliaryCommand cmd;
      cmd.kind = AuxiliaryKind::Connect;
      cmd.args = {labels[i], labels[j]};
      out.commands.push_back(cmd);
      out.thought = "Thought: construction needed; connect " + labels[i] +
                    " and " + labels[j] + ".";
      return out;
    }

  // Rule 3: mark the midpoint of the longest segment without a midpoint tag.
  double best_len = -1.0;
  std::string ma, mb;
  for (const auto& p : d.primitives) {
    if (p.kind != PrimitiveKind::Segment) continue;
    bool tagged = false;
    for (const auto& con : d.constraints) {
      if (con.kind != ConstraintKind::MidpointOf) continue;
      if ((con.args[1] == p.args[0] && con.args[2] == p.args[1]) ||
          (con.args[1] == p.args[1] && con.args[2] == p.args[0]))
        tagged = true;
    }
    if (tagged) continue;
    const double len = (d.at(p.args[0]) - d.at(p.args[1])).norm();
    if (len > best_len) {
      best_len = len;
      ma = p.args[0];
      mb = p.args[1];
    }
  }
  if (best_len > 1e-9) {
    AuxiliaryCommand cmd;
    cmd.kind = AuxiliaryKind::Midpoint;
    cmd.args = {ma, mb};
    cmd.new_label = fresh_label(d);
    out.commands.push_back(cmd);
    out.thought =
        "Thought: construction needed; mark the midpoint of " + ma + mb + ".";
    return out;
  }

  out.thought = "Thought: no auxiliary construction needed.";
  return out;
}

AuxiliaryProposal SolverGateway::propose_auxiliary(
    const Diagram& d, const std::string& question) const {
  AuxiliaryProposal raw;
  switch (cfg_.backend) {
    case SolverBackend::Oracle:
    case SolverBackend::Simulated:
      raw = propose_by_rules(d);
      break;
    case SolverBackend::Http: {
      InFlightGuard::Token token(impl_->in_flight);
      const FormalDescription f = emit_formal_description(d);
      const std::string user =
          "Figure: " + f.to_text() + "\nQuestion: " + question;
      const std::string reply =
          chat_completion(cfg_, kProposeSystemPrompt, user);
      raw.thought = "Thought: remote proposal.";
      const size_t open = reply.find('[');
      const size_t close = reply.rfind(']');
      if (open == std::string::npos || close == std::string::npos ||
          close < open) {
        raw.dropped.push_back("unparseable proposal text");
      } else {
        try {
          const json arr = json::parse(reply.substr(open, close - open + 1));
          for (const auto& jc : arr) {
            AuxiliaryCommand cmd;
            cmd.kind = auxiliary_kind_from(jc.at("kind").get<std::string>());
            cmd.args = jc.at("args").get<std::vector<std::string>>();
            cmd.new_label = jc.value("new_label", "");
            raw.commands.push_back(std::move(cmd));
          }
        } catch (const std::exception& e) {
          raw.dropped.push_back(std::string("unparseable proposal: ") +
                                e.what());
        }
      }
      break;
    }
  }

  // Validate every command with a dry run; keep only the applicable ones.
  AuxiliaryProposal out;
  out.thought = raw.thought;
  out.dropped = raw.dropped;
  Diagram probe = d;
  for (const auto& cmd : raw.commands) {
    try {
      probe = apply_auxiliary(probe, cmd);
      out.commands.push_back(cmd);
    } catch (const DiagramError& e) {
      out.dropped.push_back(std::string(to_string(cmd.kind)) + ": " +
                            e.what());
    }
  }

  impl_->log({{"type", "propose"},
              {"backend", model_tag()},
              {"thought", out.thought},
              {"accepted", out.commands.size()},
              {"dropped", out.dropped}});
  return out;
}

const char* to_string(SolverBackend b) {
  switch (b) {
    case SolverBackend::Http: return "http";
    case SolverBackend::Oracle: return "oracle";
    case SolverBackend::Simulated: return "sim";
  }
  return "?";
}

SolverBackend solver_backend_from(const std::string& name) {
  if (name == "http") return SolverBackend::Http;
  if (name == "oracle") return SolverBackend::Oracle;
  if (name == "sim" || name == "simulated") return SolverBackend::Simulated;
  throw std::invalid_argument("unknown solver backend '" + name + "'");
}

}  // namespace geoevo
