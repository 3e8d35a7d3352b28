#pragma once

#include "gaf/types.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

namespace gaf {

struct ContextPolicy {
  LayerMode mode = LayerMode::Enforce;
  double decay = 0.8;                  // lambda in [0,1)
  double escalation_threshold = 1.5;   // theta; must satisfy theta < 1/(1-lambda)
  size_t history_len = 32;             // H
  size_t arrivals_len = 16;            // A
  double bot_cv_threshold = 0.5;
  size_t bot_min_samples = 3;
  size_t exfiltration_ceiling = 512;   // redacted chars per session
  int jailbreak_threshold = 3;         // attempts per session
  int tool_escalation = 2;             // max distinct sensitive tools per session
  std::string snapshot_path;           // empty = no snapshot file
};

struct TurnDigest {
  std::string role;
  std::string text_digest;  // hash, never raw text
  double semantic_score = 0.0;
  double timestamp = 0.0;
};

// Longitudinal per-conversation record. Only digests and counters are
// retained, never raw text.
struct SessionState {
  std::string session_id;  // conversation id
  int64_t turn_index = 0;  // accepted turns
  std::deque<TurnDigest> history;
  double escalation = 0.0;  // decayed cumulative risk R
  std::deque<double> arrivals;  // inter-arrival seconds, most recent last
  double last_arrival = -1.0;   // engine-clock time of the previous turn
  size_t redacted_chars_total = 0;
  int jailbreak_attempts = 0;
  std::map<std::string, int> tool_calls;
  std::set<std::string> sensitive_tools_used;
  std::set<std::string> flags;

  void push_turn(TurnDigest digest, size_t history_len);
  void push_arrival(double now, size_t arrivals_len);
};

// escalation' = lambda * escalation + s_t. Block at escalation' >= theta,
// Alert at 0.8 * theta, Allow otherwise. Pure transition.
std::pair<SessionState, Verdict> update_escalation(SessionState state, double turn_score,
                                                   const ContextPolicy& policy);

// Coefficient-of-variation cadence score: 1 = machine-regular, 0 = humanly
// irregular. Fewer than bot_min_samples intervals yields 0; zero mean
// (simultaneous arrivals) yields 1.
double behavioral_score(const std::vector<double>& arrivals, const ContextPolicy& policy);
double behavioral_score(const std::deque<double>& arrivals, const ContextPolicy& policy);

// Session-lifetime ceilings: exfiltration, repeated jailbreaks, sensitive
// tool spread, plus the cadence alert.
std::vector<Verdict> enforce_longitudinal(const SessionState& state, const ContextPolicy& policy);

// Keyed in-memory store with optional append-only snapshot file for restart
// recovery (latest record per session wins on load).
class ContextStore {
 public:
  ContextStore() = default;
  explicit ContextStore(std::string snapshot_path);

  SessionState get(const std::string& conversation_id) const;
  void put(const SessionState& state);
  size_t size() const;

  void load_snapshot();  // no-op when unset or missing

 private:
  mutable std::mutex mu_;
  std::map<std::string, SessionState> states_;
  std::string snapshot_path_;
};

std::string session_state_to_json(const SessionState& state);
std::optional<SessionState> session_state_from_json(const std::string& line);

}  // namespace gaf
