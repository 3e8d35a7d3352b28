#include "gaf/syntactic.hpp"

#include "gaf/util.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gaf {

std::string_view to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::UnicodeFold: return "unicode_fold";
    case TransformKind::ZeroWidthStrip: return "zero_width_strip";
    case TransformKind::HomoglyphFold: return "homoglyph_fold";
    case TransformKind::Base64Decode: return "base64_decode";
    case TransformKind::HexDecode: return "hex_decode";
  }
  return "unicode_fold";
}

namespace {

// Compatibility folds for the ranges that matter in prompt obfuscation:
// fullwidth ASCII, common ligatures, typographic punctuation, exotic spaces.
std::optional<std::string> compat_fold(uint32_t cp) {
  if (cp >= 0xFF01 && cp <= 0xFF5E) {  // fullwidth ASCII block
    std::string s;
    utf8_encode(cp - 0xFEE0, s);
    return s;
  }
  switch (cp) {
    case 0x00A0:  // no-break space
    case 0x2000: case 0x2001: case 0x2002: case 0x2003: case 0x2004:
    case 0x2005: case 0x2006: case 0x2007: case 0x2008: case 0x2009:
    case 0x200A: case 0x202F: case 0x205F: case 0x3000:
      return " ";
    case 0x2018: case 0x2019: case 0x201B: return "'";
    case 0x201C: case 0x201D: case 0x201F: return "\"";
    case 0x2010: case 0x2011: case 0x2012: case 0x2013:
    case 0x2014: case 0x2015: case 0x2212:
      return "-";
    case 0x2044: return "/";
    case 0xFB00: return "ff";
    case 0xFB01: return "fi";
    case 0xFB02: return "fl";
    case 0xFB03: return "ffi";
    case 0xFB04: return "ffl";
    case 0xFB05: case 0xFB06: return "st";
    default: return std::nullopt;
  }
}

bool is_zero_width(uint32_t cp) {
  switch (cp) {
    case 0x00AD:  // soft hyphen
    case 0x200B: case 0x200C: case 0x200D: case 0x200E: case 0x200F:
    case 0x2060: case 0xFEFF:
      return true;
    default:
      return false;
  }
}

bool is_b64_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
         c == '+' || c == '/';
}

bool is_hex_char(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

constexpr size_t kMinEncodedRun = 16;
constexpr double kMinPrintableRatio = 0.9;

struct DecodedRun {
  size_t begin;
  size_t end;
  std::string decoded;
  TransformKind kind;
};

// Finds maximal candidate runs and keeps those whose decoding is mostly
// printable text. Base64 is tried before hex since hex digits are a subset
// of the base64 alphabet.
std::vector<DecodedRun> find_decodable_runs(std::string_view text) {
  std::vector<DecodedRun> runs;
  size_t i = 0;
  while (i < text.size()) {
    if (!is_b64_char(text[i])) {
      ++i;
      continue;
    }
    size_t start = i;
    while (i < text.size() && is_b64_char(text[i])) ++i;
    size_t body_end = i;
    size_t pad_end = body_end;
    while (pad_end < text.size() && pad_end - body_end < 2 && text[pad_end] == '=') ++pad_end;
    size_t run_len = pad_end - start;
    if (run_len < kMinEncodedRun) continue;

    bool all_hex = std::all_of(text.begin() + static_cast<long>(start),
                               text.begin() + static_cast<long>(body_end), is_hex_char);
    std::string_view run = text.substr(start, run_len);

    if (auto decoded = base64_decode(run);
        decoded && !decoded->empty() && printable_ratio(*decoded) >= kMinPrintableRatio) {
      runs.push_back({start, pad_end, std::move(*decoded), TransformKind::Base64Decode});
      continue;
    }
    if (all_hex && (body_end - start) % 2 == 0) {
      if (auto decoded = hex_decode(text.substr(start, body_end - start));
          decoded && !decoded->empty() && printable_ratio(*decoded) >= kMinPrintableRatio) {
        runs.push_back({start, body_end, std::move(*decoded), TransformKind::HexDecode});
      }
    }
  }
  return runs;
}

}  // namespace

ConfusablesTable ConfusablesTable::parse(std::string_view text) {
  ConfusablesTable table;
  for (const auto& raw_line : split(text, '\n')) {
    std::string line = trim(raw_line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    std::string cp_hex, replacement;
    if (!(is >> cp_hex >> replacement)) {
      throw std::runtime_error("confusables: malformed line: " + line);
    }
    uint32_t cp = static_cast<uint32_t>(std::stoul(cp_hex, nullptr, 16));
    table.map_[cp] = replacement;
  }
  return table;
}

ConfusablesTable ConfusablesTable::load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f.good()) throw std::runtime_error("confusables: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

const ConfusablesTable& ConfusablesTable::builtin() {
  // Snapshot of the most commonly abused Latin look-alikes. The bundled data
  // file extends this set.
  static const ConfusablesTable table = parse(R"(
0430 a
0435 e
043E o
0440 p
0441 c
0443 y
0445 x
0456 i
0455 s
0458 j
04BB h
0391 A
0392 B
0395 E
0396 Z
0397 H
0399 I
039A K
039C M
039D N
039F O
03A1 P
03A4 T
03A5 Y
03A7 X
03B1 a
03BF o
03C1 p
03C5 u
03BD v
0410 A
0412 B
0415 E
041A K
041C M
041D H
041E O
0420 P
0421 C
0422 T
0425 X
0406 I
1D00 A
FF41 a
024B q
01C3 !
)");
  return table;
}

std::optional<std::string> ConfusablesTable::fold(uint32_t cp) const {
  auto it = map_.find(cp);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

SignaturePack SignaturePack::parse(std::string_view text) {
  SignaturePack pack;
  int lineno = 0;
  for (const auto& raw_line : split(text, '\n')) {
    ++lineno;
    std::string line = raw_line;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() < 3) {
      throw std::runtime_error("signature pack line " + std::to_string(lineno) +
                               ": expected rule_id<TAB>action<TAB>pattern");
    }
    SignatureRule rule;
    rule.rule_id = trim(fields[0]);
    std::string action_s = trim(fields[1]);
    if (action_s.rfind("redirect:", 0) == 0) {
      rule.action = ActionKind::Redirect;
      rule.redirect_target = action_s.substr(9);
    } else {
      auto action = action_kind_from_string(action_s);
      if (!action) {
        throw std::runtime_error("signature pack line " + std::to_string(lineno) +
                                 ": unknown action '" + fields[1] + "'");
      }
      rule.action = *action;
    }
    rule.pattern = fields[2];
    try {
      rule.compiled = std::regex(rule.pattern, std::regex::icase | std::regex::optimize);
    } catch (const std::regex_error& e) {
      throw std::runtime_error("signature pack line " + std::to_string(lineno) +
                               ": bad pattern: " + e.what());
    }
    pack.rules.push_back(std::move(rule));
  }
  return pack;
}

SignaturePack SignaturePack::load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f.good()) throw std::runtime_error("signature pack: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

NormalizationReport normalize(std::string_view text, const SyntacticPolicy& policy) {
  NormalizationReport report;
  report.original_text = std::string(text);
  const ConfusablesTable& confusables =
      policy.confusables ? *policy.confusables : ConfusablesTable::builtin();

  // Single UTF-8 walk applying the three fold passes. First/last change
  // offsets are tracked per pass for the transform record.
  auto fold_text = [&](std::string_view in, std::vector<Transform>* transforms) {
    std::string out;
    out.reserve(in.size());
    struct PassRange {
      size_t first = std::string::npos, last = 0;
      size_t count = 0;
    };
    PassRange uni, zw, homo;
    size_t i = 0;
    while (i < in.size()) {
      size_t cp_start = i;
      uint32_t cp = utf8_decode(in, i);
      if (is_zero_width(cp)) {
        zw.first = std::min(zw.first, cp_start);
        zw.last = i;
        ++zw.count;
        continue;  // stripped
      }
      if (auto folded = compat_fold(cp)) {
        uni.first = std::min(uni.first, cp_start);
        uni.last = i;
        ++uni.count;
        out += *folded;
        continue;
      }
      if (cp >= 0x80) {
        if (auto folded = confusables.fold(cp)) {
          homo.first = std::min(homo.first, cp_start);
          homo.last = i;
          ++homo.count;
          out += *folded;
          continue;
        }
      }
      out.append(in.substr(cp_start, i - cp_start));
    }
    if (transforms) {
      auto push = [&](TransformKind kind, const PassRange& r) {
        if (r.count == 0) return;
        transforms->push_back(Transform{kind, r.first, r.last,
                                        std::to_string(r.count) + " codepoint(s)"});
      };
      push(TransformKind::UnicodeFold, uni);
      push(TransformKind::ZeroWidthStrip, zw);
      push(TransformKind::HomoglyphFold, homo);
    }
    return out;
  };

  std::string current = fold_text(text, &report.transforms);

  for (int depth = 0; depth < policy.max_decode_depth; ++depth) {
    auto runs = find_decodable_runs(current);
    if (runs.empty()) break;
    ++report.depth;
    std::string next;
    next.reserve(current.size());
    size_t pos = 0;
    for (auto& run : runs) {
      next.append(current, pos, run.begin - pos);
      // Decoded payloads get the fold passes applied in place so the final
      // text is a fixed point of normalize.
      next += fold_text(run.decoded, nullptr);
      report.transforms.push_back(Transform{
          run.kind, run.begin, run.end,
          "decoded " + std::to_string(run.end - run.begin) + " chars (pass " +
              std::to_string(report.depth) + ")"});
      pos = run.end;
    }
    next.append(current, pos, std::string::npos);
    current = std::move(next);
  }

  report.normalized_text = std::move(current);
  return report;
}

namespace {

bool json_type_matches(const nlohmann::json& value, const std::string& type) {
  if (type == "string") return value.is_string();
  if (type == "number") return value.is_number();
  if (type == "integer") return value.is_number_integer();
  if (type == "boolean") return value.is_boolean();
  if (type == "object") return value.is_object();
  if (type == "array") return value.is_array();
  return false;
}

}  // namespace

Verdict validate_structure(std::string_view prompt, const std::vector<ToolCallData>& calls,
                           const SyntacticPolicy& policy) {
  auto block = [](std::string why) {
    return Verdict::make(Layer::Syntactic, "builtin.schema", Action::of(ActionKind::Block), 75,
                         std::move(why));
  };
  if (!is_valid_utf8(prompt)) return block("prompt is not valid UTF-8");
  if (prompt.size() > policy.max_prompt_bytes) {
    return block("prompt exceeds max_prompt_bytes (" + std::to_string(prompt.size()) + " > " +
                 std::to_string(policy.max_prompt_bytes) + ")");
  }
  for (const auto& call : calls) {
    if (call.schema_id.empty()) {
      return block("tool '" + call.name + "' has no registered schema");
    }
    auto it = policy.schema_registry.find(call.schema_id);
    if (it == policy.schema_registry.end()) {
      return block("unknown schema '" + call.schema_id + "' for tool '" + call.name + "'");
    }
    if (!call.args.is_object()) {
      return block("tool '" + call.name + "' arguments must be an object");
    }
    for (const auto& field : it->second.fields) {
      auto arg = call.args.find(field.name);
      if (arg == call.args.end()) {
        if (field.required) {
          return block("tool '" + call.name + "' missing required field '" + field.name + "'");
        }
        continue;
      }
      if (!json_type_matches(*arg, field.type)) {
        return block("tool '" + call.name + "' field '" + field.name + "' must be " + field.type);
      }
      if (field.type == "string" && field.max_len > 0 &&
          arg->get_ref<const std::string&>().size() > field.max_len) {
        return block("tool '" + call.name + "' field '" + field.name + "' exceeds max length " +
                     std::to_string(field.max_len));
      }
    }
  }
  return Verdict::allow(Layer::Syntactic);
}

std::vector<Verdict> match_signatures_text(std::string_view text, const SignaturePack& pack) {
  std::vector<Verdict> out;
  for (const auto& rule : pack.rules) {
    if (std::regex_search(text.begin(), text.end(), rule.compiled)) {
      Action action = rule.action == ActionKind::Redirect ? Action::redirect(rule.redirect_target)
                                                          : Action::of(rule.action);
      out.push_back(Verdict::make(Layer::Syntactic, rule.rule_id, std::move(action),
                                  rule.action == ActionKind::Alert ? 30 : 85,
                                  "signature match: " + rule.rule_id));
    }
  }
  return out;
}

std::vector<Verdict> match_signatures(const NormalizationReport& report,
                                      const SyntacticPolicy& policy) {
  return match_signatures_text(report.normalized_text, *policy.signatures);
}

}  // namespace gaf
