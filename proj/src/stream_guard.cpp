#include "gaf/stream_guard.hpp"

#include <algorithm>

#include <json.hpp>

namespace gaf {

ContentGuard::ContentGuard(size_t window_bytes, StreamDetector detector)
    : window_(window_bytes), detector_(std::move(detector)) {}

std::string ContentGuard::feed(std::string_view chunk) {
  if (finished_ || trip_) return {};
  content_.append(chunk);
  return step(false);
}

std::string ContentGuard::finish() {
  if (finished_ || trip_) return {};
  finished_ = true;
  return step(true);
}

std::vector<StreamSpan> ContentGuard::alerts() const { return alerts_; }

std::string ContentGuard::step(bool flush) {
  std::vector<StreamSpan> spans = detector_ ? detector_(content_) : std::vector<StreamSpan>{};
  std::sort(spans.begin(), spans.end(), [](const StreamSpan& a, const StreamSpan& b) {
    if (a.begin != b.begin) return a.begin < b.begin;
    if (a.action != b.action) return a.action > b.action;
    return a.end > b.end;
  });

  // Alerts have no stream effect; record once per (begin,end,rule).
  for (const auto& s : spans) {
    if (s.action != ActionKind::Alert) continue;
    bool known = std::any_of(alerts_.begin(), alerts_.end(), [&](const StreamSpan& k) {
      return k.begin == s.begin && k.end == s.end && k.rule_id == s.rule_id;
    });
    if (!known && (flush || s.end < content_.size())) alerts_.push_back(s);
  }

  // First tripping span (Redirect/Block/Terminate) cuts the stream at its
  // begin; nothing at or past that offset is ever emitted.
  std::optional<StreamSpan> trip_candidate;
  for (const auto& s : spans) {
    if (s.action >= ActionKind::Redirect) {
      trip_candidate = s;
      break;
    }
  }

  size_t release_end;
  if (trip_candidate) {
    release_end = std::max(released_, std::min(trip_candidate->begin, content_.size()));
  } else if (flush) {
    release_end = content_.size();
  } else {
    release_end = content_.size() > window_ ? content_.size() - window_ : 0;
    release_end = std::max(release_end, released_);
  }

  // Cap the release at the first redact span that is not fully settled
  // inside it: spans still touching the stream head may grow, and spans
  // straddling the boundary are emitted whole on a later step.
  bool head_open = !flush && !trip_candidate;
  for (const auto& s : spans) {
    if (s.action != ActionKind::Redact) continue;
    if (s.end <= released_) continue;            // already emitted
    if (s.begin >= release_end) break;
    bool unsettled = head_open && s.end == content_.size();
    if (unsettled || s.end > release_end) {
      release_end = std::max(released_, s.begin);
      break;
    }
  }

  // Commit newly covered redact spans.
  for (const auto& s : spans) {
    if (s.action != ActionKind::Redact) continue;
    if (s.begin >= released_ && s.end <= release_end) {
      bool known = std::any_of(applied_.begin(), applied_.end(), [&](const StreamSpan& k) {
        return k.begin == s.begin && k.end == s.end;
      });
      if (!known) {
        applied_.push_back(s);
        redacted_bytes_ += s.end - s.begin;
      }
    }
  }
  std::sort(applied_.begin(), applied_.end(),
            [](const StreamSpan& a, const StreamSpan& b) { return a.begin < b.begin; });

  std::string out = render(released_, release_end);
  released_ = release_end;
  if (trip_candidate) trip_ = trip_candidate;
  return out;
}

std::string ContentGuard::render(size_t from, size_t to) const {
  to = std::min(to, content_.size());
  if (from >= to) {
    // Still emit labels for zero-width progress? No: labels belong to the
    // range containing their span begin, and an empty range contains none.
    return {};
  }
  std::string out;
  out.reserve(to - from);
  size_t pos = from;
  for (const auto& s : applied_) {
    if (s.end <= from || s.begin >= to) continue;
    if (s.begin >= pos) {
      out.append(content_, pos, s.begin - pos);
      out += s.replacement;
      pos = s.end;
    } else {
      // Span began in an earlier range; its label was emitted there.
      pos = std::max(pos, s.end);
    }
  }
  if (pos < to) out.append(content_, pos, to - pos);
  return out;
}

EventGuard::EventGuard(size_t window_bytes, StreamDetector delta_detector,
                       StreamDetector tool_detector)
    : delta_(window_bytes, std::move(delta_detector)),
      tool_(window_bytes, std::move(tool_detector)) {}

bool EventGuard::tripped() const { return delta_.tripped() || tool_.tripped(); }

const StreamSpan* EventGuard::trip() const {
  if (delta_.tripped()) return delta_.trip();
  return tool_.trip();
}

std::vector<std::string> EventGuard::push(StreamEventIn event) {
  if (tripped()) return {};
  ContentGuard& guard = event.kind == StreamEventIn::Kind::Delta ? delta_ : tool_;
  Pending p;
  p.kind = event.kind;
  p.content_begin = guard.content().size();
  p.content_end = p.content_begin + event.text.size();
  p.tool = std::move(event.tool);
  p.raw_frame = std::move(event.raw_frame);
  p.original_text = event.text;
  queue_.push_back(std::move(p));
  guard.feed(event.text);
  return drain(false);
}

std::vector<std::string> EventGuard::finish() {
  delta_.finish();
  tool_.finish();
  return drain(true);
}

std::vector<std::string> EventGuard::drain(bool flush) {
  std::vector<std::string> out;
  while (!queue_.empty()) {
    const Pending& p = queue_.front();
    const ContentGuard& guard = p.kind == StreamEventIn::Kind::Delta ? delta_ : tool_;
    if (guard.tripped() && p.content_end > guard.released()) {
      // Content at or past the trip point is withheld for good; any guarded
      // prefix of a straddling event still goes out.
      if (p.content_begin < guard.released()) {
        std::string prefix = guard.render(p.content_begin, guard.released());
        if (!prefix.empty()) {
          nlohmann::json j;
          if (p.kind == StreamEventIn::Kind::Delta) {
            j["delta"] = prefix;
          } else {
            j["tool_output"] = prefix;
            j["tool"] = p.tool;
          }
          out.push_back("data: " + j.dump() + "\n\n");
        }
      }
      queue_.pop_front();
      continue;
    }
    if (p.content_end > guard.released()) break;  // still inside the window
    std::string text = guard.render(p.content_begin, p.content_end);
    if (text == p.original_text && !p.raw_frame.empty()) {
      out.push_back(p.raw_frame);  // untouched: byte-exact passthrough
    } else if (!text.empty() || p.original_text.empty()) {
      nlohmann::json j;
      if (p.kind == StreamEventIn::Kind::Delta) {
        j["delta"] = text;
      } else {
        j["tool_output"] = text;
        j["tool"] = p.tool;
      }
      out.push_back("data: " + j.dump() + "\n\n");
    }
    queue_.pop_front();
  }
  (void)flush;
  return out;
}

}  // namespace gaf
