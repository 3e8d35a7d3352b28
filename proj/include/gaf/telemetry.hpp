#pragma once

#include "gaf/types.hpp"

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace gaf {

// One audit log entry. Serialized records carry digests only: no raw prompt
// text and no credential bytes.
struct DecisionRecord {
  int64_t timestamp_us = 0;
  std::string request_id;
  std::string conversation_id;
  std::string session_id;
  std::string phase;  // admission | generation | intervention | post
  std::optional<Layer> layer;
  std::string rule_id;
  ActionKind action = ActionKind::Allow;
  int severity = 0;
  std::string rationale;
  std::string policy_version;
  int64_t latency_us = 0;
  bool summary = false;  // one summary record per request

  std::string to_json_line() const;
  static std::optional<DecisionRecord> from_json_line(const std::string& line);
};

struct LatencySample {
  std::string request_id;
  int64_t t_setup_us = 0;  // request receipt until first upstream output byte
};

// Nearest-rank p95: sort ascending, take the element at 1-based index
// ceil(0.95 * n). Always an element of the input, never interpolated.
// Throws std::invalid_argument on empty input.
int64_t p95(std::vector<int64_t> samples);
double p95(std::vector<double> samples);

// Appends records as JSON lines. Write failures never block the request
// path; they only bump the dropped-record counter. The scrubber replaces any
// registered secret bytes before serialization.
class DecisionLog {
 public:
  DecisionLog() = default;
  explicit DecisionLog(const std::string& path);

  void register_secret(const std::string& secret);
  void record(DecisionRecord rec);

  uint64_t dropped() const { return dropped_.load(std::memory_order_relaxed); }
  uint64_t written() const { return written_.load(std::memory_order_relaxed); }

  // Applies the scrubber to a string (exposed for reuse when composing
  // rationales from request-derived text).
  std::string scrub(std::string text) const;

 private:
  mutable std::mutex mu_;
  std::unique_ptr<std::ostream> out_;
  std::vector<std::string> secrets_;
  std::atomic<uint64_t> dropped_{0};
  std::atomic<uint64_t> written_{0};
};

// Process-wide counters and the setup-latency quantile backing
// GET /__gaf/metrics.
class Metrics {
 public:
  void count_decision(Layer layer, ActionKind action);
  void add_setup_sample(int64_t t_setup_us);
  void add_dropped_records(uint64_t n);

  std::optional<int64_t> setup_p95_us() const;
  std::string render_plaintext() const;

 private:
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, uint64_t> decisions_;
  std::vector<int64_t> setup_samples_;
  uint64_t dropped_records_ = 0;
};

}  // namespace gaf
