#include "gaf/access.hpp"

#include "gaf/util.hpp"

namespace gaf {

std::string credential_hash(std::string_view token, std::string_view salt) {
  std::string buf;
  buf.reserve(salt.size() + 1 + token.size());
  buf += salt;
  buf += ':';
  buf += token;
  return sha256_hex(buf);
}

std::optional<Session> SessionStore::find(const std::string& session_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

void SessionStore::put(const Session& session) {
  std::lock_guard<std::mutex> lock(mu_);
  sessions_[session.session_id] = session;
}

void SessionStore::erase(const std::string& session_id) {
  std::lock_guard<std::mutex> lock(mu_);
  sessions_.erase(session_id);
}

size_t SessionStore::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return sessions_.size();
}

AuthResult authenticate(std::string_view bearer_token, std::string_view presented_session_id,
                        std::string_view client_address, const AccessPolicy& policy,
                        SessionStore& store, double now) {
  auto deny = [](std::string why) {
    return Verdict::make(Layer::Access, "builtin.auth", Action::of(ActionKind::Block), 80,
                         std::move(why));
  };
  if (bearer_token.empty()) return deny("missing bearer token");
  auto it = policy.identity_table.find(credential_hash(bearer_token, policy.identity_salt));
  if (it == policy.identity_table.end()) return deny("unknown credential");
  const Principal& principal = it->second;

  if (!presented_session_id.empty()) {
    auto existing = store.find(std::string(presented_session_id));
    if (existing && !existing->terminated &&
        existing->principal.id == principal.id &&
        now - existing->last_seen <= policy.session_ttl &&
        now - existing->created_at <= policy.session_ttl) {
      if (policy.bind_session_address && existing->client_address != client_address) {
        return Verdict::make(Layer::Access, "builtin.session_bind",
                             Action::of(ActionKind::Block), 80,
                             "session bound to a different client address");
      }
      Session resumed = *existing;
      resumed.last_seen = now;
      store.put(resumed);
      return resumed;
    }
    if (existing) store.erase(existing->session_id);
  }

  Session fresh;
  fresh.session_id = random_id("sess");
  fresh.principal = principal;
  fresh.created_at = now;
  fresh.last_seen = now;
  fresh.client_address = std::string(client_address);
  store.put(fresh);
  return fresh;
}

Verdict authorize_tool(const Session& session, std::string_view tool_name,
                       const AccessPolicy& policy) {
  auto deny = [&](std::string why) {
    return Verdict::make(Layer::Access, "builtin.tool_scope", Action::of(ActionKind::Block), 80,
                         std::move(why));
  };
  std::string name(tool_name);
  auto scope_it = session.principal.tool_scopes.find(name);
  if (scope_it == session.principal.tool_scopes.end()) {
    return deny("tool '" + name + "' is not in the principal's scopes");
  }
  const ToolScope& scope = scope_it->second;
  if (!scope.allowed) return deny("tool '" + name + "' is denied by scope");

  auto reg_it = policy.tool_registry.find(name);
  if (reg_it == policy.tool_registry.end()) {
    return deny("tool '" + name + "' is not registered");
  }
  bool sensitive = scope.sensitive || reg_it->second.sensitive;
  if (sensitive && session.principal.roles.count("sensitive_ops") == 0) {
    return deny("tool '" + name + "' is sensitive and requires role sensitive_ops");
  }
  int used = 0;
  if (auto it = session.tool_call_counts.find(name); it != session.tool_call_counts.end()) {
    used = it->second;
  }
  if (scope.max_calls_per_session > 0 && used >= scope.max_calls_per_session) {
    return deny("tool '" + name + "' reached its per-session call ceiling");
  }
  return Verdict::allow(Layer::Access);
}

}  // namespace gaf
