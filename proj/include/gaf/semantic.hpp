#pragma once

#include "gaf/syntactic.hpp"
#include "gaf/types.hpp"

#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <vector>

namespace gaf {

enum class TriggerKind : uint8_t { Pattern = 0, Keywords = 1, Builtin = 2 };

struct SemanticRule {
  std::string rule_id;
  double weight = 0.5;  // in (0, 1]
  TriggerKind trigger = TriggerKind::Pattern;
  std::string pattern;
  std::regex compiled;                 // Pattern
  std::vector<std::string> keywords;   // Keywords: all within `window` tokens
  size_t window = 16;
  std::string builtin_name;            // Builtin: named detector in code
  std::optional<double> alert_override;
  std::optional<double> block_override;
};

struct SemanticRulePack {
  std::vector<SemanticRule> rules;

  static SemanticRulePack load_file(const std::string& path);
  static SemanticRulePack parse(std::string_view text);
};

enum class PiiCategory : uint8_t { Email = 0, Phone = 1, GovId = 2, ApiKey = 3, CreditCard = 4 };

std::string_view to_string(PiiCategory cat);
std::optional<PiiCategory> pii_category_from_string(std::string_view s);

struct PiiRule {
  PiiCategory category;
  std::string pattern;
  std::regex compiled;
  bool luhn_check = false;  // digit checksum gate (credit cards)
  bool digit_boundaries = false;  // reject matches flanked by digits
};

struct PiiRulePack {
  std::vector<PiiRule> rules;

  static PiiRulePack load_file(const std::string& path);
  static PiiRulePack parse(std::string_view text);
  static const PiiRulePack& builtin();
};

struct ExternalClassifier {
  std::string url;  // e.g. http://127.0.0.1:9090/classify
  int timeout_ms = 200;
  FailMode on_timeout = FailMode::FailClosedSensitive;
};

struct SemanticPolicy {
  LayerMode mode = LayerMode::Enforce;
  std::shared_ptr<const SemanticRulePack> rule_pack = std::make_shared<SemanticRulePack>();
  std::shared_ptr<const PiiRulePack> pii_rules;  // null -> builtin
  double alert_threshold = 0.5;
  double block_threshold = 0.9;
  bool redact_input_pii = true;
  std::optional<ExternalClassifier> external;
};

enum class ScoreSource : uint8_t { Rules = 0, External = 1 };

struct SemanticScore {
  double score = 0.0;  // noisy-OR over matched rule weights
  std::vector<std::string> matched_rules;
  ScoreSource source = ScoreSource::Rules;
  // Effective thresholds after per-rule overrides (most conservative wins).
  double alert_threshold = 0.5;
  double block_threshold = 0.9;
};

// Scores both the original and the normalized text; a rule counts as matched
// if it fires on either, and the score is the noisy-OR of matched weights.
SemanticScore score_prompt(const NormalizationReport& report, const SemanticPolicy& policy);
SemanticScore score_text(std::string_view text, const SemanticPolicy& policy);

// Shipped-category PII spans, non-overlapping, longest match wins.
std::vector<RedactSpan> detect_pii(std::string_view text);
std::vector<RedactSpan> detect_pii(std::string_view text, const PiiRulePack& pack);

// Replaces each span with "[REDACTED:<category>]".
std::string apply_redactions(std::string_view text, const std::vector<RedactSpan>& spans);
std::string redaction_label(std::string_view category);

bool luhn_valid(std::string_view digits_with_separators);

struct ExternalResult {
  bool timed_out = false;  // also covers transport errors and bad responses
  SemanticScore score;
};

// POSTs {"text": ...} to the configured endpoint; {"score", "rules"} reply.
// Timeouts, non-2xx and malformed bodies all collapse to the timeout signal.
ExternalResult classify_external(std::string_view text, const ExternalClassifier& external);

}  // namespace gaf
