#include "gaf/sse.hpp"

#include <json.hpp>

namespace gaf {

std::string sse_frame(std::string_view payload) {
  std::string out = "data: ";
  out += payload;
  out += "\n\n";
  return out;
}

std::string sse_done_frame() { return sse_frame(kSseDoneSentinel); }

void SseDecoder::feed(std::string_view bytes) {
  buf_.append(bytes);
  size_t pos;
  while ((pos = buf_.find("\n\n")) != std::string::npos) {
    std::string frame = buf_.substr(0, pos);
    buf_.erase(0, pos + 2);
    if (frame.rfind("data: ", 0) == 0) {
      ready_.push_back(frame.substr(6));
    } else if (frame.rfind("data:", 0) == 0) {
      ready_.push_back(frame.substr(5));
    }
    // Non-data frames (comments, other fields) are dropped; the v1 protocol
    // does not use them.
  }
}

std::vector<std::string> SseDecoder::take_events() {
  std::vector<std::string> out;
  out.swap(ready_);
  return out;
}

SseConformance check_sse_conformance(std::string_view raw) {
  SseConformance result;
  size_t pos = 0;
  bool saw_done = false;
  std::string prev_payload;
  while (pos < raw.size()) {
    if (saw_done) {
      result.error = "bytes after the [DONE] sentinel";
      return result;
    }
    size_t frame_end = raw.find("\n\n", pos);
    if (frame_end == std::string_view::npos) {
      result.error = "dangling frame without terminating blank line";
      return result;
    }
    std::string_view frame = raw.substr(pos, frame_end - pos);
    pos = frame_end + 2;
    if (frame.rfind("data: ", 0) != 0) {
      result.error = "frame does not start with 'data: '";
      return result;
    }
    std::string_view payload = frame.substr(6);
    if (payload.find('\n') != std::string_view::npos) {
      result.error = "multi-line event payload";
      return result;
    }
    if (payload == kSseDoneSentinel) {
      saw_done = true;
      if (!prev_payload.empty()) {
        auto j = nlohmann::json::parse(prev_payload, nullptr, false);
        if (!j.is_discarded() && j.is_object() && j.value("gaf", "") == "terminated") {
          result.terminated_is_last = true;
        }
      }
      continue;
    }
    auto j = nlohmann::json::parse(std::string(payload), nullptr, false);
    if (j.is_discarded()) {
      result.error = "event payload is not valid JSON";
      return result;
    }
    if (j.is_object() && j.value("gaf", "") == "terminated") {
      result.terminated = true;
      result.terminated_rule = j.value("rule_id", "");
    }
    result.payloads.emplace_back(payload);
    prev_payload = std::string(payload);
  }
  if (!saw_done) {
    result.error = "stream does not end with the [DONE] sentinel";
    return result;
  }
  result.ok = true;
  return result;
}

}  // namespace gaf
