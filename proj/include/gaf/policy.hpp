#pragma once

#include "gaf/access.hpp"
#include "gaf/context.hpp"
#include "gaf/network.hpp"
#include "gaf/semantic.hpp"
#include "gaf/syntactic.hpp"
#include "gaf/types.hpp"

#include <map>
#include <memory>
#include <stdexcept>
#include <string>

namespace gaf {

class PolicyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// What the engine does when the semantic score reaches block_threshold.
enum class HighScoreAction : uint8_t { Block = 0, Redirect = 1 };

struct PolicyConfig {
  std::string version;
  FailMode fail_mode = FailMode::FailClosedSensitive;
  NetworkPolicy network;
  AccessPolicy access;
  SyntacticPolicy syntactic;
  SemanticPolicy semantic;
  ContextPolicy context;
  std::map<std::string, std::string> fallback_responses;
  HighScoreAction semantic_block_action = HighScoreAction::Block;
  std::string semantic_redirect_target;  // Redirect only
  size_t stream_window_bytes = 256;      // W
};

// Parses and fully validates a policy document. Pack files referenced by the
// document are resolved against base_dir. Throws PolicyError with
// line/column positions for parse errors and with the dangling identifier
// for reference errors.
PolicyConfig load_policy(const std::string& document, const std::string& base_dir = ".");
PolicyConfig load_policy_file(const std::string& path);

}  // namespace gaf
