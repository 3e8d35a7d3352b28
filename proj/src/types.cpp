#include "gaf/types.hpp"

#include <algorithm>

namespace gaf {

std::string_view to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::Allow: return "allow";
    case ActionKind::Alert: return "alert";
    case ActionKind::Redact: return "redact";
    case ActionKind::Redirect: return "redirect";
    case ActionKind::Block: return "block";
    case ActionKind::Terminate: return "terminate";
  }
  return "allow";
}

std::optional<ActionKind> action_kind_from_string(std::string_view s) {
  if (s == "allow") return ActionKind::Allow;
  if (s == "alert") return ActionKind::Alert;
  if (s == "redact") return ActionKind::Redact;
  if (s == "redirect") return ActionKind::Redirect;
  if (s == "block") return ActionKind::Block;
  if (s == "terminate") return ActionKind::Terminate;
  return std::nullopt;
}

std::string_view to_string(Layer layer) {
  switch (layer) {
    case Layer::Network: return "network";
    case Layer::Access: return "access";
    case Layer::Syntactic: return "syntactic";
    case Layer::Semantic: return "semantic";
    case Layer::Context: return "context";
  }
  return "network";
}

std::optional<Layer> layer_from_string(std::string_view s) {
  if (s == "network") return Layer::Network;
  if (s == "access") return Layer::Access;
  if (s == "syntactic") return Layer::Syntactic;
  if (s == "semantic") return Layer::Semantic;
  if (s == "context") return Layer::Context;
  return std::nullopt;
}

std::vector<RedactSpan> normalize_spans(std::vector<RedactSpan> spans) {
  spans.erase(std::remove_if(spans.begin(), spans.end(),
                             [](const RedactSpan& s) { return s.end <= s.begin; }),
              spans.end());
  std::stable_sort(spans.begin(), spans.end(), [](const RedactSpan& a, const RedactSpan& b) {
    return a.begin != b.begin ? a.begin < b.begin : a.end < b.end;
  });
  std::vector<RedactSpan> out;
  for (auto& s : spans) {
    if (!out.empty() && s.begin <= out.back().end) {
      out.back().end = std::max(out.back().end, s.end);
    } else {
      out.push_back(std::move(s));
    }
  }
  return out;
}

Verdict Verdict::allow(Layer layer) {
  return Verdict{layer, "builtin.allow", Action::allow(), 0, "", std::nullopt};
}

Verdict Verdict::make(Layer layer, std::string rule_id, Action action, int severity,
                      std::string rationale, std::optional<double> score) {
  if (action.kind == ActionKind::Allow) severity = 0;
  if (action.kind == ActionKind::Terminate) severity = 100;
  severity = std::clamp(severity, 0, 100);
  return Verdict{layer, std::move(rule_id), std::move(action), severity, std::move(rationale),
                 score};
}

Action combine_verdicts(const std::vector<Verdict>& verdicts) {
  ActionKind kind = ActionKind::Allow;
  for (const auto& v : verdicts) kind = std::max(kind, v.action.kind);
  if (kind == ActionKind::Redact) {
    std::vector<RedactSpan> spans;
    for (const auto& v : verdicts) {
      if (v.action.kind != ActionKind::Redact) continue;
      spans.insert(spans.end(), v.action.redact_spans.begin(), v.action.redact_spans.end());
    }
    return Action::redact(std::move(spans));
  }
  if (kind == ActionKind::Redirect) {
    const Verdict* winner = nullptr;
    for (const auto& v : verdicts) {
      if (v.action.kind != ActionKind::Redirect) continue;
      if (!winner || v.severity > winner->severity ||
          (v.severity == winner->severity && v.rule_id < winner->rule_id)) {
        winner = &v;
      }
    }
    return Action::redirect(winner ? winner->action.redirect_target : std::string());
  }
  return Action::of(kind);
}

const Verdict* deciding_verdict(const std::vector<Verdict>& verdicts) {
  const Verdict* best = nullptr;
  for (const auto& v : verdicts) {
    if (!best) {
      best = &v;
      continue;
    }
    if (v.action.kind != best->action.kind) {
      if (v.action.kind > best->action.kind) best = &v;
    } else if (v.severity != best->severity) {
      if (v.severity > best->severity) best = &v;
    } else if (v.rule_id < best->rule_id) {
      best = &v;
    }
  }
  return best;
}

std::string_view to_string(FailMode mode) {
  return mode == FailMode::FailClosedAll ? "fail_closed_all" : "fail_closed_sensitive";
}

std::optional<FailMode> fail_mode_from_string(std::string_view s) {
  if (s == "fail_closed_sensitive") return FailMode::FailClosedSensitive;
  if (s == "fail_closed_all") return FailMode::FailClosedAll;
  return std::nullopt;
}

std::string_view to_string(LayerMode mode) {
  switch (mode) {
    case LayerMode::Off: return "off";
    case LayerMode::Monitor: return "monitor";
    case LayerMode::Enforce: return "enforce";
  }
  return "enforce";
}

std::optional<LayerMode> layer_mode_from_string(std::string_view s) {
  if (s == "off") return LayerMode::Off;
  if (s == "monitor") return LayerMode::Monitor;
  if (s == "enforce") return LayerMode::Enforce;
  return std::nullopt;
}

Verdict apply_layer_mode(Verdict verdict, LayerMode mode) {
  if (mode == LayerMode::Monitor && verdict.action.kind > ActionKind::Alert) {
    verdict.action = Action::of(ActionKind::Alert);
    verdict.rationale += " (monitor mode)";
  }
  return verdict;
}

}  // namespace gaf
