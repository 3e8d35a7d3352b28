#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace gaf {

// Enforcement outcomes ordered by severity. The numeric values define the
// total order used by combine_verdicts; do not reorder.
enum class ActionKind : uint8_t {
  Allow = 0,
  Alert = 1,
  Redact = 2,
  Redirect = 3,
  Block = 4,
  Terminate = 5,
};

std::string_view to_string(ActionKind kind);
std::optional<ActionKind> action_kind_from_string(std::string_view s);

enum class Layer : uint8_t {
  Network = 0,
  Access = 1,
  Syntactic = 2,
  Semantic = 3,
  Context = 4,
};

std::string_view to_string(Layer layer);
std::optional<Layer> layer_from_string(std::string_view s);

// Half-open byte range [begin, end) to be masked, tagged with the detector
// category (email, phone, ...).
struct RedactSpan {
  size_t begin = 0;
  size_t end = 0;
  std::string category;

  bool operator==(const RedactSpan& o) const {
    return begin == o.begin && end == o.end && category == o.category;
  }
};

// Merges overlapping or touching spans. Matches the byte-marking model: mark
// every covered byte, re-extract maximal runs. The merged span keeps the
// category of the earliest-starting input span.
std::vector<RedactSpan> normalize_spans(std::vector<RedactSpan> spans);

struct Action {
  ActionKind kind = ActionKind::Allow;
  std::vector<RedactSpan> redact_spans;  // Redact only
  std::string redirect_target;           // Redirect only

  static Action allow() { return {}; }
  static Action of(ActionKind k) { return Action{k, {}, {}}; }
  static Action redact(std::vector<RedactSpan> spans) {
    return Action{ActionKind::Redact, normalize_spans(std::move(spans)), {}};
  }
  static Action redirect(std::string target) {
    return Action{ActionKind::Redirect, {}, std::move(target)};
  }
};

// A single layer's judgment on one message.
struct Verdict {
  Layer layer = Layer::Network;
  std::string rule_id;
  Action action;
  int severity = 0;  // 0..100; Allow => 0, Terminate => 100
  std::string rationale;
  std::optional<double> score;  // detector confidence, when meaningful

  static Verdict allow(Layer layer);
  static Verdict make(Layer layer, std::string rule_id, Action action, int severity,
                      std::string rationale, std::optional<double> score = std::nullopt);
};

// Join of several verdicts under the severity order. Empty input yields
// Allow; the join of Redact verdicts carries the merged span union.
Action combine_verdicts(const std::vector<Verdict>& verdicts);

// The verdict that determined the joined action: maximal by (action kind,
// severity, lexicographically smallest rule_id). Null for empty input.
const Verdict* deciding_verdict(const std::vector<Verdict>& verdicts);

struct ToolScope {
  bool allowed = false;
  int max_calls_per_session = 0;
  bool sensitive = false;
};

struct Principal {
  std::string id;
  std::set<std::string> roles;
  std::map<std::string, ToolScope> tool_scopes;  // unknown tools are denied
  std::string rate_class;
};

enum class FailMode : uint8_t {
  FailClosedSensitive = 0,  // deny on detector failure only for sensitive flows
  FailClosedAll = 1,        // deny on detector failure for all traffic
};

std::string_view to_string(FailMode mode);
std::optional<FailMode> fail_mode_from_string(std::string_view s);

// Per-layer operating mode. Monitor demotes enforcing verdicts to Alert so
// deployments can stage a layer before turning it on.
enum class LayerMode : uint8_t { Off = 0, Monitor = 1, Enforce = 2 };

std::string_view to_string(LayerMode mode);
std::optional<LayerMode> layer_mode_from_string(std::string_view s);

// Applies monitor-mode demotion to a verdict produced by a layer.
Verdict apply_layer_mode(Verdict verdict, LayerMode mode);

}  // namespace gaf
