#pragma once

#include "gaf/types.hpp"

#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gaf {

// A detector hit over the upstream content stream. Redact spans are replaced
// in place; Redirect/Block/Terminate spans trip the stream at span.begin;
// Alert spans are reported without any stream effect.
struct StreamSpan {
  size_t begin = 0;
  size_t end = 0;
  ActionKind action = ActionKind::Redact;
  std::string replacement;  // Redact only
  std::string rule_id;
  std::string category;
};

// Runs over the full content received so far; must return consistent results
// as the content grows (a match, once followed by non-matching bytes, stays
// fixed). detect_pii and signature matching satisfy this.
using StreamDetector = std::function<std::vector<StreamSpan>(std::string_view content)>;

// Holdback window over one text stream. Bytes are released only once they
// are at least `window_bytes` behind the stream head (or at finish/trip), so
// any detector span shorter than the window is caught before emission.
//
// Releases are byte-exact equivalent to batch redaction of the final content
// for span lengths <= window_bytes; longer spans may leak a prefix, which is
// the documented window bound.
class ContentGuard {
 public:
  ContentGuard(size_t window_bytes, StreamDetector detector);

  // Appends upstream text; returns newly released guarded output.
  std::string feed(std::string_view chunk);
  // End of upstream: releases everything still pending.
  std::string finish();

  bool tripped() const { return trip_.has_value(); }
  const StreamSpan* trip() const { return trip_ ? &*trip_ : nullptr; }

  size_t released() const { return released_; }
  const std::string& content() const { return content_; }
  size_t redacted_original_bytes() const { return redacted_bytes_; }
  const std::vector<StreamSpan>& applied_redactions() const { return applied_; }
  std::vector<StreamSpan> alerts() const;

  // Renders content[from, to) with the currently applied redactions. A
  // span's label is emitted in the range containing its begin.
  std::string render(size_t from, size_t to) const;

 private:
  std::string step(bool flush);

  size_t window_;
  StreamDetector detector_;
  std::string content_;
  size_t released_ = 0;
  bool finished_ = false;
  std::optional<StreamSpan> trip_;
  std::vector<StreamSpan> applied_;  // sorted, non-overlapping, fully released
  std::vector<StreamSpan> alerts_;
  size_t redacted_bytes_ = 0;
};

// One upstream SSE event routed through the guard.
struct StreamEventIn {
  enum class Kind { Delta, ToolOutput };
  Kind kind = Kind::Delta;
  std::string text;
  std::string tool;       // ToolOutput only
  std::string raw_frame;  // original wire bytes, passed through when untouched
};

// Event-level wrapper: maintains one ContentGuard per stream kind, releases
// whole events in arrival order, and passes original frame bytes through
// whenever an event's content is untouched.
class EventGuard {
 public:
  EventGuard(size_t window_bytes, StreamDetector delta_detector,
             StreamDetector tool_detector);

  std::vector<std::string> push(StreamEventIn event);  // frames ready to emit
  std::vector<std::string> finish();

  bool tripped() const;
  const StreamSpan* trip() const;

  const ContentGuard& delta_guard() const { return delta_; }
  const ContentGuard& tool_guard() const { return tool_; }
  size_t redacted_original_bytes() const {
    return delta_.redacted_original_bytes() + tool_.redacted_original_bytes();
  }
  // Concatenated tool-output text received so far (for semantic scanning).
  const std::string& tool_text() const { return tool_.content(); }

 private:
  struct Pending {
    StreamEventIn::Kind kind;
    size_t content_begin;
    size_t content_end;
    std::string tool;
    std::string raw_frame;
    std::string original_text;
  };

  std::vector<std::string> drain(bool flush);

  ContentGuard delta_;
  ContentGuard tool_;
  std::deque<Pending> queue_;
};

}  // namespace gaf
