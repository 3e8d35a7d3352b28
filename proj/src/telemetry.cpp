#include "gaf/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace gaf {

using nlohmann::json;

std::string DecisionRecord::to_json_line() const {
  json j;
  j["ts_us"] = timestamp_us;
  j["request_id"] = request_id;
  j["conversation_id"] = conversation_id;
  j["session_id"] = session_id;
  j["phase"] = phase;
  j["layer"] = layer ? std::string(to_string(*layer)) : std::string();
  j["rule_id"] = rule_id;
  j["action"] = std::string(to_string(action));
  j["severity"] = severity;
  j["rationale"] = rationale;
  j["policy_version"] = policy_version;
  j["latency_us"] = latency_us;
  j["summary"] = summary;
  return j.dump();
}

std::optional<DecisionRecord> DecisionRecord::from_json_line(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  DecisionRecord r;
  r.timestamp_us = j.value("ts_us", int64_t{0});
  r.request_id = j.value("request_id", "");
  r.conversation_id = j.value("conversation_id", "");
  r.session_id = j.value("session_id", "");
  r.phase = j.value("phase", "");
  std::string layer_s = j.value("layer", "");
  if (!layer_s.empty()) r.layer = layer_from_string(layer_s);
  r.rule_id = j.value("rule_id", "");
  r.action = action_kind_from_string(j.value("action", "allow")).value_or(ActionKind::Allow);
  r.severity = j.value("severity", 0);
  r.rationale = j.value("rationale", "");
  r.policy_version = j.value("policy_version", "");
  r.latency_us = j.value("latency_us", int64_t{0});
  r.summary = j.value("summary", false);
  return r;
}

namespace {

template <typename T>
T p95_impl(std::vector<T> samples) {
  if (samples.empty()) throw std::invalid_argument("p95: empty sample set");
  std::sort(samples.begin(), samples.end());
  size_t n = samples.size();
  size_t rank = static_cast<size_t>(std::ceil(0.95 * static_cast<double>(n)));
  if (rank == 0) rank = 1;
  return samples[rank - 1];
}

}  // namespace

int64_t p95(std::vector<int64_t> samples) { return p95_impl(std::move(samples)); }
double p95(std::vector<double> samples) { return p95_impl(std::move(samples)); }

DecisionLog::DecisionLog(const std::string& path) {
  if (!path.empty()) {
    auto f = std::make_unique<std::ofstream>(path, std::ios::app);
    if (f->good()) out_ = std::move(f);
  }
}

void DecisionLog::register_secret(const std::string& secret) {
  if (secret.size() < 4) return;  // too short to scrub meaningfully
  std::lock_guard<std::mutex> lock(mu_);
  if (std::find(secrets_.begin(), secrets_.end(), secret) == secrets_.end()) {
    secrets_.push_back(secret);
  }
}

std::string DecisionLog::scrub(std::string text) const {
  std::lock_guard<std::mutex> lock(mu_);
  for (const auto& secret : secrets_) {
    size_t pos = 0;
    while ((pos = text.find(secret, pos)) != std::string::npos) {
      text.replace(pos, secret.size(), "[SCRUBBED]");
      pos += 10;
    }
  }
  return text;
}

void DecisionLog::record(DecisionRecord rec) {
  rec.rationale = scrub(std::move(rec.rationale));
  rec.rule_id = scrub(std::move(rec.rule_id));
  std::string line = rec.to_json_line();
  std::lock_guard<std::mutex> lock(mu_);
  if (!out_) {
    dropped_.fetch_add(1, std::memory_order_relaxed);
    return;
  }
  (*out_) << line << '\n';
  out_->flush();
  if (!out_->good()) {
    dropped_.fetch_add(1, std::memory_order_relaxed);
  } else {
    written_.fetch_add(1, std::memory_order_relaxed);
  }
}

void Metrics::count_decision(Layer layer, ActionKind action) {
  std::lock_guard<std::mutex> lock(mu_);
  ++decisions_[{std::string(to_string(layer)), std::string(to_string(action))}];
}

void Metrics::add_setup_sample(int64_t t_setup_us) {
  std::lock_guard<std::mutex> lock(mu_);
  setup_samples_.push_back(t_setup_us);
}

void Metrics::add_dropped_records(uint64_t n) {
  std::lock_guard<std::mutex> lock(mu_);
  dropped_records_ += n;
}

std::optional<int64_t> Metrics::setup_p95_us() const {
  std::lock_guard<std::mutex> lock(mu_);
  if (setup_samples_.empty()) return std::nullopt;
  return p95(setup_samples_);
}

std::string Metrics::render_plaintext() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::ostringstream os;
  for (const auto& [key, count] : decisions_) {
    os << "gaf_decisions_total{layer=\"" << key.first << "\",action=\"" << key.second << "\"} "
       << count << '\n';
  }
  if (!setup_samples_.empty()) {
    os << "gaf_latency_setup_p95_us " << p95(setup_samples_) << '\n';
  }
  os << "gaf_dropped_records_total " << dropped_records_ << '\n';
  return os.str();
}

}  // namespace gaf
