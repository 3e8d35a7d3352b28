#include "gaf/semantic.hpp"

#include "gaf/util.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <httplib.h>
#include <json.hpp>

namespace gaf {

namespace {

// Trigger: at least three non-empty lines that are identical after
// lowercasing and stripping non-alphanumerics. Marker for Best-of-N style
// prompt resampling and many-shot stuffing.
bool detect_repeated_lines(std::string_view text) {
  std::map<std::string, int> counts;
  for (const auto& line : split(text, '\n')) {
    std::string norm;
    for (unsigned char c : line) {
      if (std::isalnum(c)) norm.push_back(static_cast<char>(std::tolower(c)));
    }
    if (norm.size() < 8) continue;
    if (++counts[norm] >= 3) return true;
  }
  return false;
}

// Trigger: a word with many lower/upper case alternations, the randomized
// casing perturbation used by Best-of-N jailbreaks.
bool detect_random_casing(std::string_view text) {
  int flips = 0;
  bool prev_alpha = false;
  bool prev_upper = false;
  int run_flips = 0;
  for (unsigned char c : text) {
    if (std::isalpha(c)) {
      bool upper = std::isupper(c) != 0;
      if (prev_alpha && upper != prev_upper) {
        if (++run_flips >= 6) return true;
      }
      prev_alpha = true;
      prev_upper = upper;
    } else {
      prev_alpha = false;
      run_flips = 0;
    }
  }
  (void)flips;
  return false;
}

bool run_builtin_trigger(const std::string& name, std::string_view text) {
  if (name == "repeated_lines") return detect_repeated_lines(text);
  if (name == "random_casing") return detect_random_casing(text);
  return false;
}

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

// All keywords present within a window of `window` consecutive word tokens.
bool keywords_within_window(const std::vector<std::string>& keywords, size_t window,
                            std::string_view text) {
  auto words = tokenize_words(text);
  if (keywords.empty() || words.size() < keywords.size()) return false;
  for (size_t start = 0; start < words.size(); ++start) {
    size_t end = std::min(words.size(), start + window);
    size_t found = 0;
    for (const auto& kw : keywords) {
      for (size_t i = start; i < end; ++i) {
        if (words[i] == kw) {
          ++found;
          break;
        }
      }
    }
    if (found == keywords.size()) return true;
  }
  return false;
}

bool rule_matches(const SemanticRule& rule, std::string_view text) {
  switch (rule.trigger) {
    case TriggerKind::Pattern:
      return std::regex_search(text.begin(), text.end(), rule.compiled);
    case TriggerKind::Keywords:
      return keywords_within_window(rule.keywords, rule.window, text);
    case TriggerKind::Builtin:
      return run_builtin_trigger(rule.builtin_name, text);
  }
  return false;
}

}  // namespace

SemanticRulePack SemanticRulePack::parse(std::string_view text) {
  SemanticRulePack pack;
  int lineno = 0;
  for (const auto& raw_line : split(text, '\n')) {
    ++lineno;
    std::string line = raw_line;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() < 4) {
      throw std::runtime_error("semantic pack line " + std::to_string(lineno) +
                               ": expected rule_id<TAB>weight<TAB>kind<TAB>trigger[<TAB>opts]");
    }
    SemanticRule rule;
    rule.rule_id = trim(fields[0]);
    rule.weight = std::stod(fields[1]);
    if (!(rule.weight > 0.0 && rule.weight <= 1.0)) {
      throw std::runtime_error("semantic pack line " + std::to_string(lineno) +
                               ": weight must be in (0,1]");
    }
    std::string kind = trim(fields[2]);
    if (kind == "pattern") {
      rule.trigger = TriggerKind::Pattern;
      rule.pattern = fields[3];
      try {
        rule.compiled = std::regex(rule.pattern, std::regex::icase | std::regex::optimize);
      } catch (const std::regex_error& e) {
        throw std::runtime_error("semantic pack line " + std::to_string(lineno) +
                                 ": bad pattern: " + e.what());
      }
    } else if (kind == "keywords") {
      rule.trigger = TriggerKind::Keywords;
      std::string spec = trim(fields[3]);
      size_t at = spec.rfind('@');
      if (at != std::string::npos) {
        rule.window = static_cast<size_t>(std::stoul(spec.substr(at + 1)));
        spec = spec.substr(0, at);
      }
      for (auto& kw : split(spec, ',')) {
        auto w = to_lower(trim(kw));
        if (!w.empty()) rule.keywords.push_back(std::move(w));
      }
      if (rule.keywords.empty()) {
        throw std::runtime_error("semantic pack line " + std::to_string(lineno) +
                                 ": keyword rule has no keywords");
      }
    } else if (kind == "builtin") {
      rule.trigger = TriggerKind::Builtin;
      rule.builtin_name = trim(fields[3]);
    } else {
      throw std::runtime_error("semantic pack line " + std::to_string(lineno) +
                               ": unknown trigger kind '" + kind + "'");
    }
    if (fields.size() >= 5) {
      for (auto& opt : split(trim(fields[4]), ',')) {
        auto kv = split(trim(opt), '=');
        if (kv.size() != 2) continue;
        if (kv[0] == "alert") rule.alert_override = std::stod(kv[1]);
        if (kv[0] == "block") rule.block_override = std::stod(kv[1]);
      }
    }
    pack.rules.push_back(std::move(rule));
  }
  return pack;
}

SemanticRulePack SemanticRulePack::load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f.good()) throw std::runtime_error("semantic pack: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

std::string_view to_string(PiiCategory cat) {
  switch (cat) {
    case PiiCategory::Email: return "email";
    case PiiCategory::Phone: return "phone";
    case PiiCategory::GovId: return "gov_id";
    case PiiCategory::ApiKey: return "api_key";
    case PiiCategory::CreditCard: return "credit_card";
  }
  return "email";
}

std::optional<PiiCategory> pii_category_from_string(std::string_view s) {
  if (s == "email") return PiiCategory::Email;
  if (s == "phone") return PiiCategory::Phone;
  if (s == "gov_id") return PiiCategory::GovId;
  if (s == "api_key") return PiiCategory::ApiKey;
  if (s == "credit_card") return PiiCategory::CreditCard;
  return std::nullopt;
}

PiiRulePack PiiRulePack::parse(std::string_view text) {
  PiiRulePack pack;
  int lineno = 0;
  for (const auto& raw_line : split(text, '\n')) {
    ++lineno;
    std::string line = raw_line;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() < 2) {
      throw std::runtime_error("pii pack line " + std::to_string(lineno) +
                               ": expected category<TAB>pattern[<TAB>flags]");
    }
    PiiRule rule;
    auto cat = pii_category_from_string(trim(fields[0]));
    if (!cat) {
      throw std::runtime_error("pii pack line " + std::to_string(lineno) +
                               ": unknown category '" + fields[0] + "'");
    }
    rule.category = *cat;
    rule.pattern = fields[1];
    try {
      rule.compiled = std::regex(rule.pattern, std::regex::optimize);
    } catch (const std::regex_error& e) {
      throw std::runtime_error("pii pack line " + std::to_string(lineno) + ": bad pattern: " +
                               e.what());
    }
    if (fields.size() >= 3) {
      for (auto& flag : split(trim(fields[2]), ',')) {
        if (trim(flag) == "luhn") rule.luhn_check = true;
        if (trim(flag) == "digit_boundaries") rule.digit_boundaries = true;
      }
    }
    pack.rules.push_back(std::move(rule));
  }
  return pack;
}

PiiRulePack PiiRulePack::load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f.good()) throw std::runtime_error("pii pack: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

const PiiRulePack& PiiRulePack::builtin() {
  static const PiiRulePack pack = parse(
      "email\t[A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(\\.[A-Za-z0-9-]+)*\\.[A-Za-z]{2,}\n"
      "phone\t\\+?[0-9]{0,2}[ .-]?\\(?[0-9]{3}\\)?[ .-][0-9]{3}[ .-][0-9]{4}\tdigit_boundaries\n"
      "gov_id\t[0-9]{3}-[0-9]{2}-[0-9]{4}\tdigit_boundaries\n"
      "api_key\tsk-[A-Za-z0-9]{20,}\n"
      "api_key\t(api[_-]?key|bearer)[=: ]+[A-Za-z0-9_\\-]{16,}\n"
      "credit_card\t[0-9](?:[ -]?[0-9]){12,18}\tluhn,digit_boundaries\n");
  return pack;
}

bool luhn_valid(std::string_view digits_with_separators) {
  std::string digits;
  for (char c : digits_with_separators) {
    if (c >= '0' && c <= '9') digits.push_back(c);
  }
  if (digits.size() < 13 || digits.size() > 19) return false;
  int sum = 0;
  bool dbl = false;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    int d = *it - '0';
    if (dbl) {
      d *= 2;
      if (d > 9) d -= 9;
    }
    sum += d;
    dbl = !dbl;
  }
  return sum % 10 == 0;
}

std::vector<RedactSpan> detect_pii(std::string_view text, const PiiRulePack& pack) {
  struct Candidate {
    size_t begin, end;
    PiiCategory category;
  };
  std::vector<Candidate> candidates;
  for (const auto& rule : pack.rules) {
    auto begin = std::cregex_iterator(text.data(), text.data() + text.size(), rule.compiled);
    for (auto it = begin; it != std::cregex_iterator(); ++it) {
      size_t s = static_cast<size_t>(it->position());
      size_t e = s + static_cast<size_t>(it->length());
      if (rule.digit_boundaries) {
        if (s > 0 && std::isdigit(static_cast<unsigned char>(text[s - 1]))) continue;
        if (e < text.size() && std::isdigit(static_cast<unsigned char>(text[e]))) continue;
      }
      if (rule.luhn_check && !luhn_valid(text.substr(s, e - s))) continue;
      candidates.push_back({s, e, rule.category});
    }
  }
  // Longest match wins on overlap; ties resolved by earliest start.
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    size_t la = a.end - a.begin, lb = b.end - b.begin;
    if (la != lb) return la > lb;
    if (a.begin != b.begin) return a.begin < b.begin;
    return a.category < b.category;
  });
  std::vector<Candidate> chosen;
  for (const auto& c : candidates) {
    bool overlaps = false;
    for (const auto& k : chosen) {
      if (c.begin < k.end && k.begin < c.end) {
        overlaps = true;
        break;
      }
    }
    if (!overlaps) chosen.push_back(c);
  }
  std::sort(chosen.begin(), chosen.end(),
            [](const Candidate& a, const Candidate& b) { return a.begin < b.begin; });
  std::vector<RedactSpan> out;
  out.reserve(chosen.size());
  for (const auto& c : chosen) {
    out.push_back(RedactSpan{c.begin, c.end, std::string(to_string(c.category))});
  }
  return out;
}

std::vector<RedactSpan> detect_pii(std::string_view text) {
  return detect_pii(text, PiiRulePack::builtin());
}

std::string redaction_label(std::string_view category) {
  std::string out = "[REDACTED:";
  out += category;
  out += ']';
  return out;
}

std::string apply_redactions(std::string_view text, const std::vector<RedactSpan>& spans) {
  std::string out;
  out.reserve(text.size());
  size_t pos = 0;
  for (const auto& span : spans) {
    if (span.begin < pos || span.begin > text.size()) continue;
    out.append(text.substr(pos, span.begin - pos));
    out += redaction_label(span.category);
    pos = std::min(text.size(), span.end);
  }
  out.append(text.substr(pos));
  return out;
}

SemanticScore score_text(std::string_view text, const SemanticPolicy& policy) {
  SemanticScore result;
  result.alert_threshold = policy.alert_threshold;
  result.block_threshold = policy.block_threshold;
  double pass = 1.0;
  for (const auto& rule : policy.rule_pack->rules) {
    if (!rule_matches(rule, text)) continue;
    result.matched_rules.push_back(rule.rule_id);
    pass *= (1.0 - rule.weight);
    if (rule.alert_override) {
      result.alert_threshold = std::min(result.alert_threshold, *rule.alert_override);
    }
    if (rule.block_override) {
      result.block_threshold = std::min(result.block_threshold, *rule.block_override);
    }
  }
  result.score = result.matched_rules.empty() ? 0.0 : 1.0 - pass;
  return result;
}

SemanticScore score_prompt(const NormalizationReport& report, const SemanticPolicy& policy) {
  SemanticScore result;
  result.alert_threshold = policy.alert_threshold;
  result.block_threshold = policy.block_threshold;
  std::set<std::string> matched;
  double pass = 1.0;
  for (const auto& rule : policy.rule_pack->rules) {
    bool hit = rule_matches(rule, report.original_text);
    if (!hit && report.normalized_text != report.original_text) {
      hit = rule_matches(rule, report.normalized_text);
    }
    if (!hit) continue;
    if (matched.insert(rule.rule_id).second) {
      pass *= (1.0 - rule.weight);
      if (rule.alert_override) {
        result.alert_threshold = std::min(result.alert_threshold, *rule.alert_override);
      }
      if (rule.block_override) {
        result.block_threshold = std::min(result.block_threshold, *rule.block_override);
      }
    }
  }
  result.matched_rules.assign(matched.begin(), matched.end());
  result.score = matched.empty() ? 0.0 : 1.0 - pass;
  return result;
}

ExternalResult classify_external(std::string_view text, const ExternalClassifier& external) {
  ExternalResult out;
  out.score.source = ScoreSource::External;

  // Split http://host:port/path into client target + path.
  std::string url = external.url;
  std::string path = "/";
  size_t scheme = url.find("://");
  if (scheme != std::string::npos) {
    size_t path_pos = url.find('/', scheme + 3);
    if (path_pos != std::string::npos) {
      path = url.substr(path_pos);
      url = url.substr(0, path_pos);
    }
  }
  httplib::Client client(url);
  client.set_connection_timeout(0, external.timeout_ms * 1000);
  client.set_read_timeout(0, external.timeout_ms * 1000);
  client.set_write_timeout(0, external.timeout_ms * 1000);

  nlohmann::json body;
  body["text"] = std::string(text);
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res || res->status < 200 || res->status >= 300) {
    out.timed_out = true;
    return out;
  }
  auto parsed = nlohmann::json::parse(res->body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("score") ||
      !parsed["score"].is_number()) {
    out.timed_out = true;
    return out;
  }
  double score = parsed["score"].get<double>();
  if (score < 0.0 || score > 1.0) {
    out.timed_out = true;
    return out;
  }
  out.score.score = score;
  if (parsed.contains("rules") && parsed["rules"].is_array()) {
    for (const auto& r : parsed["rules"]) {
      if (r.is_string()) out.score.matched_rules.push_back(r.get<std::string>());
    }
  }
  return out;
}

}  // namespace gaf
