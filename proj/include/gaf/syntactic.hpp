#pragma once

#include "gaf/types.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <json.hpp>

namespace gaf {

enum class TransformKind : uint8_t {
  UnicodeFold = 0,
  ZeroWidthStrip = 1,
  HomoglyphFold = 2,
  Base64Decode = 3,
  HexDecode = 4,
};

std::string_view to_string(TransformKind kind);

struct Transform {
  TransformKind kind;
  size_t begin = 0;  // byte range in the text the pass consumed
  size_t end = 0;
  std::string note;
};

struct NormalizationReport {
  std::string original_text;
  std::string normalized_text;
  std::vector<Transform> transforms;
  int depth = 0;  // number of decode passes applied
};

// Codepoint -> ASCII replacement table bundled as a data file so verdicts do
// not depend on the host Unicode version.
class ConfusablesTable {
 public:
  static ConfusablesTable load_file(const std::string& path);  // throws on parse error
  static ConfusablesTable parse(std::string_view text);
  static const ConfusablesTable& builtin();

  std::optional<std::string> fold(uint32_t cp) const;
  size_t size() const { return map_.size(); }

 private:
  std::map<uint32_t, std::string> map_;
};

struct SignatureRule {
  std::string rule_id;
  ActionKind action = ActionKind::Block;
  std::string redirect_target;  // action "redirect:<fallback_id>" only
  std::string pattern;
  std::regex compiled;
};

struct SignaturePack {
  std::vector<SignatureRule> rules;

  static SignaturePack load_file(const std::string& path);  // throws on bad pattern
  static SignaturePack parse(std::string_view text);
};

struct SchemaField {
  std::string name;
  std::string type;  // string | number | integer | boolean | object | array
  bool required = true;
  size_t max_len = 0;  // strings only; 0 = unbounded
};

struct SchemaDef {
  std::vector<SchemaField> fields;
};

struct SyntacticPolicy {
  LayerMode mode = LayerMode::Enforce;
  size_t max_prompt_bytes = 8192;
  int max_decode_depth = 3;
  std::map<std::string, SchemaDef> schema_registry;
  std::shared_ptr<const SignaturePack> signatures = std::make_shared<SignaturePack>();
  std::shared_ptr<const ConfusablesTable> confusables;  // null -> builtin
};

// Deobfuscation pipeline: compatibility folding, zero-width stripping,
// homoglyph folding, then repeated embedded base64/hex decoding bounded by
// max_decode_depth. Total function; the worst case is the input unchanged.
NormalizationReport normalize(std::string_view text, const SyntacticPolicy& policy);

struct ToolCallData {
  std::string name;
  std::string schema_id;  // empty = unregistered tool
  nlohmann::json args;
};

// Format/schema validation for the prompt and declared tool calls.
Verdict validate_structure(std::string_view prompt, const std::vector<ToolCallData>& calls,
                           const SyntacticPolicy& policy);

// Signature matching over the normalized text, so encodings cannot hide
// payloads. One verdict per matching pack rule.
std::vector<Verdict> match_signatures(const NormalizationReport& report,
                                      const SyntacticPolicy& policy);

// Raw-text variant used by the streaming output scanner.
std::vector<Verdict> match_signatures_text(std::string_view text, const SignaturePack& pack);

}  // namespace gaf
