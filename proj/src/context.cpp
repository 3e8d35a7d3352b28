#include "gaf/context.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace gaf {

using nlohmann::json;

void SessionState::push_turn(TurnDigest digest, size_t history_len) {
  history.push_back(std::move(digest));
  while (history.size() > history_len) history.pop_front();
}

void SessionState::push_arrival(double now, size_t arrivals_len) {
  if (last_arrival >= 0.0) {
    arrivals.push_back(std::max(0.0, now - last_arrival));
    while (arrivals.size() > arrivals_len) arrivals.pop_front();
  }
  last_arrival = now;
}

std::pair<SessionState, Verdict> update_escalation(SessionState state, double turn_score,
                                                   const ContextPolicy& policy) {
  state.escalation = policy.decay * state.escalation + turn_score;
  Verdict verdict = Verdict::allow(Layer::Context);
  if (state.escalation >= policy.escalation_threshold) {
    verdict = Verdict::make(Layer::Context, "builtin.escalation", Action::of(ActionKind::Block),
                            90, "decayed escalation crossed threshold", state.escalation);
  } else if (state.escalation >= 0.8 * policy.escalation_threshold) {
    verdict = Verdict::make(Layer::Context, "builtin.escalation", Action::of(ActionKind::Alert),
                            40, "decayed escalation approaching threshold", state.escalation);
  }
  return {std::move(state), std::move(verdict)};
}

double behavioral_score(const std::vector<double>& arrivals, const ContextPolicy& policy) {
  if (arrivals.size() < policy.bot_min_samples) return 0.0;
  double mean = 0.0;
  for (double v : arrivals) mean += v;
  mean /= static_cast<double>(arrivals.size());
  if (mean <= 0.0) return 1.0;  // simultaneous arrivals: maximally machine-like
  double var = 0.0;
  for (double v : arrivals) var += (v - mean) * (v - mean);
  var /= static_cast<double>(arrivals.size());
  double cv = std::sqrt(var) / mean;
  return std::max(0.0, 1.0 - cv / policy.bot_cv_threshold);
}

double behavioral_score(const std::deque<double>& arrivals, const ContextPolicy& policy) {
  return behavioral_score(std::vector<double>(arrivals.begin(), arrivals.end()), policy);
}

std::vector<Verdict> enforce_longitudinal(const SessionState& state,
                                          const ContextPolicy& policy) {
  std::vector<Verdict> out;
  if (state.redacted_chars_total >= policy.exfiltration_ceiling) {
    out.push_back(Verdict::make(Layer::Context, "builtin.exfil_ceiling",
                                Action::of(ActionKind::Block), 85,
                                "session exceeded redacted-character ceiling"));
  }
  if (state.jailbreak_attempts >= policy.jailbreak_threshold) {
    out.push_back(Verdict::make(Layer::Context, "builtin.jailbreak_repeat",
                                Action::of(ActionKind::Terminate), 100,
                                "repeated jailbreak attempts in session"));
  }
  if (static_cast<int>(state.sensitive_tools_used.size()) > policy.tool_escalation) {
    out.push_back(Verdict::make(Layer::Context, "builtin.tool_escalation",
                                Action::of(ActionKind::Block), 80,
                                "escalating use of distinct sensitive tools"));
  }
  double bot = behavioral_score(state.arrivals, policy);
  if (bot >= 0.8) {
    out.push_back(Verdict::make(Layer::Context, "builtin.bot", Action::of(ActionKind::Alert), 35,
                                "machine-regular request cadence", bot));
  }
  return out;
}

std::string session_state_to_json(const SessionState& state) {
  json j;
  j["v"] = 1;
  j["session"] = state.session_id;
  j["turn_index"] = state.turn_index;
  j["escalation"] = state.escalation;
  j["last_arrival"] = state.last_arrival;
  j["arrivals"] = state.arrivals;
  j["redacted_chars_total"] = state.redacted_chars_total;
  j["jailbreak_attempts"] = state.jailbreak_attempts;
  j["tool_calls"] = state.tool_calls;
  j["sensitive_tools"] = state.sensitive_tools_used;
  j["flags"] = state.flags;
  json hist = json::array();
  for (const auto& t : state.history) {
    hist.push_back({{"role", t.role},
                    {"digest", t.text_digest},
                    {"score", t.semantic_score},
                    {"ts", t.timestamp}});
  }
  j["history"] = std::move(hist);
  return j.dump();
}

std::optional<SessionState> session_state_from_json(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object() || j.value("v", 0) != 1) return std::nullopt;
  SessionState s;
  s.session_id = j.value("session", "");
  if (s.session_id.empty()) return std::nullopt;
  s.turn_index = j.value("turn_index", int64_t{0});
  s.escalation = j.value("escalation", 0.0);
  s.last_arrival = j.value("last_arrival", -1.0);
  if (j.contains("arrivals")) {
    for (const auto& v : j["arrivals"]) s.arrivals.push_back(v.get<double>());
  }
  s.redacted_chars_total = j.value("redacted_chars_total", size_t{0});
  s.jailbreak_attempts = j.value("jailbreak_attempts", 0);
  if (j.contains("tool_calls")) {
    s.tool_calls = j["tool_calls"].get<std::map<std::string, int>>();
  }
  if (j.contains("sensitive_tools")) {
    for (const auto& v : j["sensitive_tools"]) s.sensitive_tools_used.insert(v.get<std::string>());
  }
  if (j.contains("flags")) {
    for (const auto& v : j["flags"]) s.flags.insert(v.get<std::string>());
  }
  if (j.contains("history")) {
    for (const auto& t : j["history"]) {
      s.history.push_back(TurnDigest{t.value("role", ""), t.value("digest", ""),
                                     t.value("score", 0.0), t.value("ts", 0.0)});
    }
  }
  return s;
}

ContextStore::ContextStore(std::string snapshot_path) : snapshot_path_(std::move(snapshot_path)) {}

SessionState ContextStore::get(const std::string& conversation_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = states_.find(conversation_id);
  if (it != states_.end()) return it->second;
  SessionState fresh;
  fresh.session_id = conversation_id;
  return fresh;
}

void ContextStore::put(const SessionState& state) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    states_[state.session_id] = state;
  }
  if (!snapshot_path_.empty()) {
    std::ofstream f(snapshot_path_, std::ios::app);
    if (f.good()) f << session_state_to_json(state) << '\n';
  }
}

size_t ContextStore::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return states_.size();
}

void ContextStore::load_snapshot() {
  if (snapshot_path_.empty()) return;
  std::ifstream f(snapshot_path_);
  if (!f.good()) return;
  std::string line;
  std::lock_guard<std::mutex> lock(mu_);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (auto s = session_state_from_json(line)) states_[s->session_id] = *s;
  }
}

}  // namespace gaf
