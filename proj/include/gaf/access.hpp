#pragma once

#include "gaf/types.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>

namespace gaf {

struct ToolInfo {
  bool sensitive = false;
  std::string schema_id;
};

struct AccessPolicy {
  LayerMode mode = LayerMode::Enforce;
  // Keyed by salted credential hash; raw tokens are discarded at load time.
  std::map<std::string, Principal> identity_table;
  std::string identity_salt = "gaf-default-salt";
  double session_ttl = 3600.0;  // seconds
  bool bind_session_address = false;
  std::map<std::string, ToolInfo> tool_registry;
};

std::string credential_hash(std::string_view token, std::string_view salt);

struct Session {
  std::string session_id;
  Principal principal;
  double created_at = 0.0;
  double last_seen = 0.0;
  std::string client_address;
  std::map<std::string, int> tool_call_counts;
  bool terminated = false;  // set when a stream of this session is terminated
};

using AuthResult = std::variant<Session, Verdict>;

// Concurrent session table; lookups and updates are linearizable per
// session id.
class SessionStore {
 public:
  std::optional<Session> find(const std::string& session_id) const;
  void put(const Session& session);
  void erase(const std::string& session_id);
  size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, Session> sessions_;
};

// Resolves a bearer token to a new or resumed session. A session is expired
// once either its idle time or its total lifetime exceeds session_ttl; a
// valid token then yields a fresh session. Unknown or empty tokens fail
// closed with rule "builtin.auth".
AuthResult authenticate(std::string_view bearer_token, std::string_view presented_session_id,
                        std::string_view client_address, const AccessPolicy& policy,
                        SessionStore& store, double now);

// Allow iff the principal's scope allows the tool, the per-session call
// ceiling is not reached, and sensitive tools are backed by the
// "sensitive_ops" role. Tools absent from scopes or registry fail closed.
Verdict authorize_tool(const Session& session, std::string_view tool_name,
                       const AccessPolicy& policy);

}  // namespace gaf
