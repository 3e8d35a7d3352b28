#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gaf {

// Wire framing for the v1 streaming protocol: one `data:` line per event,
// blank-line terminated, closed by the literal sentinel `data: [DONE]`.

std::string sse_frame(std::string_view payload);
std::string sse_done_frame();

inline constexpr std::string_view kSseDoneSentinel = "[DONE]";

// Incremental event extraction for proxy-side upstream reads. Push bytes,
// pop complete event payloads.
class SseDecoder {
 public:
  void feed(std::string_view bytes);
  // Complete payloads accumulated so far (moves them out).
  std::vector<std::string> take_events();
  // Unconsumed partial frame bytes (diagnostics).
  const std::string& pending() const { return buf_; }

 private:
  std::string buf_;
  std::vector<std::string> ready_;
};

// Strict conformance check over a full captured stream. Every event must be
// a single well-formed `data:` line; the final event must be the [DONE]
// sentinel; no bytes may trail it.
struct SseConformance {
  bool ok = false;
  std::string error;
  std::vector<std::string> payloads;  // excluding [DONE]
  bool terminated = false;            // cut-off event present
  std::string terminated_rule;
  bool terminated_is_last = false;    // cut-off immediately precedes [DONE]
};

SseConformance check_sse_conformance(std::string_view raw);

}  // namespace gaf
