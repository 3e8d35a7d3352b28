#include "gaf/policy.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gaf {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw PolicyError("policy: " + msg); }

std::pair<int, int> line_col_at(const std::string& text, size_t byte_pos) {
  int line = 1, col = 1;
  for (size_t i = 0; i < byte_pos && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

std::string resolve_path(const std::string& base_dir, const std::string& rel) {
  std::filesystem::path p(rel);
  if (p.is_absolute()) return rel;
  return (std::filesystem::path(base_dir) / p).string();
}

LayerMode parse_mode(const json& section, const char* layer_name) {
  std::string mode_s = section.value("mode", "enforce");
  auto mode = layer_mode_from_string(mode_s);
  if (!mode) fail(std::string(layer_name) + ".mode: unknown mode '" + mode_s + "'");
  return *mode;
}

std::vector<CidrRange> parse_ranges(const json& arr, const std::string& what) {
  std::vector<CidrRange> out;
  for (const auto& v : arr) {
    auto range = CidrRange::parse(v.get<std::string>());
    if (!range) fail(what + ": bad address range '" + v.get<std::string>() + "'");
    out.push_back(*range);
  }
  return out;
}

NetworkPolicy parse_network(const json& j) {
  NetworkPolicy pol;
  if (!j.contains("network")) {
    pol.rate_tiers["standard"] = RateTier{};
    return pol;
  }
  const json& n = j["network"];
  pol.mode = parse_mode(n, "network");
  if (n.contains("ip_deny")) pol.ip_deny = parse_ranges(n["ip_deny"], "network.ip_deny");
  if (n.contains("ip_allow") && !n["ip_allow"].is_null()) {
    pol.ip_allow = parse_ranges(n["ip_allow"], "network.ip_allow");
  }
  pol.max_concurrent_streams = n.value("max_concurrent_streams", 64);
  pol.trust_forwarded_for = n.value("trust_forwarded_for", false);
  if (n.contains("rate_tiers")) {
    for (const auto& [name, spec] : n["rate_tiers"].items()) {
      RateTier tier;
      tier.capacity = spec.value("capacity", 60.0);
      tier.refill_per_s = spec.value("refill_per_s", 1.0);
      std::string mode = spec.value("cost_mode", "per_request");
      if (mode == "per_request") {
        tier.cost_mode = TokenCostMode::PerRequest;
      } else if (mode == "per_prompt_token") {
        tier.cost_mode = TokenCostMode::PerPromptToken;
      } else {
        fail("network.rate_tiers." + name + ": unknown cost_mode '" + mode + "'");
      }
      if (tier.capacity < 1.0) fail("network.rate_tiers." + name + ": capacity must be >= 1");
      if (tier.refill_per_s <= 0.0) {
        fail("network.rate_tiers." + name + ": refill_per_s must be > 0");
      }
      pol.rate_tiers[name] = tier;
    }
  }
  pol.default_rate_tier = n.value("default_rate_tier", "standard");
  if (pol.rate_tiers.empty()) pol.rate_tiers["standard"] = RateTier{};
  if (!pol.rate_tiers.count(pol.default_rate_tier)) {
    fail("network.default_rate_tier: unknown tier '" + pol.default_rate_tier + "'");
  }
  return pol;
}

AccessPolicy parse_access(const json& j, const NetworkPolicy& network) {
  AccessPolicy pol;
  if (!j.contains("access")) return pol;
  const json& a = j["access"];
  pol.mode = parse_mode(a, "access");
  pol.identity_salt = a.value("identity_salt", pol.identity_salt);
  pol.session_ttl = a.value("session_ttl_s", pol.session_ttl);
  pol.bind_session_address = a.value("bind_session_address", false);
  if (a.contains("tool_registry")) {
    for (const auto& [name, spec] : a["tool_registry"].items()) {
      ToolInfo info;
      info.sensitive = spec.value("sensitive", false);
      info.schema_id = spec.value("schema_id", "");
      pol.tool_registry[name] = info;
    }
  }
  if (a.contains("identities")) {
    for (const auto& entry : a["identities"]) {
      std::string hash;
      if (entry.contains("token")) {
        // Raw token in the document: hash it immediately and keep only the
        // salted hash in memory.
        hash = credential_hash(entry["token"].get<std::string>(), pol.identity_salt);
      } else if (entry.contains("token_sha256")) {
        hash = entry["token_sha256"].get<std::string>();
      } else {
        fail("access.identities: entry needs 'token' or 'token_sha256'");
      }
      if (!entry.contains("principal")) fail("access.identities: entry missing 'principal'");
      const json& p = entry["principal"];
      Principal principal;
      principal.id = p.value("id", "");
      if (principal.id.empty()) fail("access.identities: principal.id is required");
      if (p.contains("roles")) {
        for (const auto& r : p["roles"]) principal.roles.insert(r.get<std::string>());
      }
      principal.rate_class = p.value("rate_class", network.default_rate_tier);
      if (!network.rate_tiers.count(principal.rate_class)) {
        fail("access.identities: principal '" + principal.id + "' references unknown rate class '" +
             principal.rate_class + "'");
      }
      if (p.contains("tool_scopes")) {
        for (const auto& [tool, spec] : p["tool_scopes"].items()) {
          ToolScope scope;
          scope.allowed = spec.value("allowed", false);
          scope.max_calls_per_session = spec.value("max_calls_per_session", 0);
          scope.sensitive = spec.value("sensitive", false);
          principal.tool_scopes[tool] = scope;
        }
      }
      pol.identity_table[hash] = std::move(principal);
    }
  }
  return pol;
}

SyntacticPolicy parse_syntactic(const json& j, const std::string& base_dir) {
  SyntacticPolicy pol;
  if (!j.contains("syntactic")) return pol;
  const json& s = j["syntactic"];
  pol.mode = parse_mode(s, "syntactic");
  pol.max_prompt_bytes = s.value("max_prompt_bytes", pol.max_prompt_bytes);
  pol.max_decode_depth = s.value("max_decode_depth", pol.max_decode_depth);
  if (pol.max_decode_depth < 1) fail("syntactic.max_decode_depth must be >= 1");
  if (s.contains("signature_pack")) {
    pol.signatures = std::make_shared<SignaturePack>(
        SignaturePack::load_file(resolve_path(base_dir, s["signature_pack"].get<std::string>())));
  }
  if (s.contains("confusables")) {
    pol.confusables = std::make_shared<ConfusablesTable>(
        ConfusablesTable::load_file(resolve_path(base_dir, s["confusables"].get<std::string>())));
  }
  if (s.contains("schemas")) {
    for (const auto& [schema_id, spec] : s["schemas"].items()) {
      SchemaDef def;
      if (spec.contains("fields")) {
        for (const auto& f : spec["fields"]) {
          SchemaField field;
          field.name = f.value("name", "");
          if (field.name.empty()) fail("syntactic.schemas." + schema_id + ": field without name");
          field.type = f.value("type", "string");
          field.required = f.value("required", true);
          field.max_len = f.value("max_len", size_t{0});
          def.fields.push_back(std::move(field));
        }
      }
      pol.schema_registry[schema_id] = std::move(def);
    }
  }
  return pol;
}

SemanticPolicy parse_semantic(const json& j, const std::string& base_dir) {
  SemanticPolicy pol;
  if (!j.contains("semantic")) return pol;
  const json& s = j["semantic"];
  pol.mode = parse_mode(s, "semantic");
  pol.alert_threshold = s.value("alert_threshold", pol.alert_threshold);
  pol.block_threshold = s.value("block_threshold", pol.block_threshold);
  if (pol.alert_threshold > pol.block_threshold) {
    fail("semantic: alert_threshold must be <= block_threshold");
  }
  pol.redact_input_pii = s.value("redact_input_pii", true);
  if (s.contains("rule_pack")) {
    pol.rule_pack = std::make_shared<SemanticRulePack>(
        SemanticRulePack::load_file(resolve_path(base_dir, s["rule_pack"].get<std::string>())));
  }
  if (s.contains("pii_pack")) {
    pol.pii_rules = std::make_shared<PiiRulePack>(
        PiiRulePack::load_file(resolve_path(base_dir, s["pii_pack"].get<std::string>())));
  }
  if (s.contains("external") && !s["external"].is_null()) {
    ExternalClassifier ext;
    ext.url = s["external"].value("url", "");
    if (ext.url.empty()) fail("semantic.external: url is required");
    ext.timeout_ms = s["external"].value("timeout_ms", 200);
    std::string on_timeout = s["external"].value("on_timeout", "fail_closed_sensitive");
    auto mode = fail_mode_from_string(on_timeout);
    if (!mode) fail("semantic.external: unknown on_timeout '" + on_timeout + "'");
    ext.on_timeout = *mode;
    pol.external = ext;
  }
  return pol;
}

ContextPolicy parse_context(const json& j) {
  ContextPolicy pol;
  if (!j.contains("context")) return pol;
  const json& c = j["context"];
  pol.mode = parse_mode(c, "context");
  pol.decay = c.value("decay", pol.decay);
  if (!(pol.decay >= 0.0 && pol.decay < 1.0)) fail("context.decay must be in [0,1)");
  pol.escalation_threshold = c.value("escalation_threshold", pol.escalation_threshold);
  if (pol.escalation_threshold <= 0.0) fail("context.escalation_threshold must be > 0");
  // Reachable-but-not-trivial: theta below the steady-state ceiling of the
  // geometric series for unit scores.
  if (pol.escalation_threshold >= 1.0 / (1.0 - pol.decay)) {
    fail("context.escalation_threshold must be < 1/(1-decay), got " +
         std::to_string(pol.escalation_threshold));
  }
  pol.history_len = c.value("history_len", pol.history_len);
  pol.arrivals_len = c.value("arrivals_len", pol.arrivals_len);
  pol.bot_cv_threshold = c.value("bot_cv_threshold", pol.bot_cv_threshold);
  if (pol.bot_cv_threshold <= 0.0) fail("context.bot_cv_threshold must be > 0");
  pol.bot_min_samples = c.value("bot_min_samples", pol.bot_min_samples);
  if (pol.bot_min_samples < 3) fail("context.bot_min_samples must be >= 3");
  pol.exfiltration_ceiling = c.value("exfiltration_ceiling", pol.exfiltration_ceiling);
  pol.jailbreak_threshold = c.value("jailbreak_threshold", pol.jailbreak_threshold);
  pol.tool_escalation = c.value("tool_escalation", pol.tool_escalation);
  pol.snapshot_path = c.value("snapshot_path", "");
  return pol;
}

}  // namespace

PolicyConfig load_policy(const std::string& document, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(document);
  } catch (const json::parse_error& e) {
    auto [line, col] = line_col_at(document, e.byte > 0 ? e.byte - 1 : 0);
    throw PolicyError("policy: parse error at line " + std::to_string(line) + ", column " +
                      std::to_string(col) + ": " + e.what());
  }
  if (!j.is_object()) fail("document must be a JSON object");

  PolicyConfig cfg;
  cfg.version = j.value("version", "");
  if (cfg.version.empty()) fail("version is missing or empty");
  std::string fail_mode_s = j.value("fail_mode", "fail_closed_sensitive");
  auto fm = fail_mode_from_string(fail_mode_s);
  if (!fm) fail("unknown fail_mode '" + fail_mode_s + "'");
  cfg.fail_mode = *fm;
  cfg.stream_window_bytes = j.value("stream_window_bytes", size_t{256});
  if (cfg.stream_window_bytes == 0) fail("stream_window_bytes must be > 0");

  if (j.contains("fallback_responses")) {
    for (const auto& [id, text] : j["fallback_responses"].items()) {
      cfg.fallback_responses[id] = text.get<std::string>();
    }
  }

  cfg.network = parse_network(j);
  cfg.access = parse_access(j, cfg.network);
  cfg.syntactic = parse_syntactic(j, base_dir);
  cfg.semantic = parse_semantic(j, base_dir);
  cfg.context = parse_context(j);

  if (j.contains("semantic") && j["semantic"].contains("block_action")) {
    std::string act = j["semantic"]["block_action"].get<std::string>();
    if (act == "block") {
      cfg.semantic_block_action = HighScoreAction::Block;
    } else if (act.rfind("redirect:", 0) == 0) {
      cfg.semantic_block_action = HighScoreAction::Redirect;
      cfg.semantic_redirect_target = act.substr(9);
    } else {
      fail("semantic.block_action must be 'block' or 'redirect:<fallback_id>'");
    }
  }

  // Cross-reference checks: every redirect target must resolve.
  if (cfg.semantic_block_action == HighScoreAction::Redirect &&
      !cfg.fallback_responses.count(cfg.semantic_redirect_target)) {
    fail("reference error: fallback id '" + cfg.semantic_redirect_target +
         "' is not defined in fallback_responses");
  }
  for (const auto& rule : cfg.syntactic.signatures->rules) {
    if (rule.action == ActionKind::Redirect &&
        !cfg.fallback_responses.count(rule.redirect_target)) {
      fail("reference error: fallback id '" + rule.redirect_target + "' (signature rule '" +
           rule.rule_id + "') is not defined in fallback_responses");
    }
  }
  for (const auto& [tool, info] : cfg.access.tool_registry) {
    if (!info.schema_id.empty() && !cfg.syntactic.schema_registry.count(info.schema_id)) {
      fail("reference error: tool '" + tool + "' references unknown schema '" + info.schema_id +
           "'");
    }
  }
  return cfg;
}

PolicyConfig load_policy_file(const std::string& path) {
  std::ifstream f(path);
  if (!f.good()) throw PolicyError("policy: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return load_policy(ss.str(), std::filesystem::path(path).parent_path().string());
}

}  // namespace gaf
