#pragma once

#include "gaf/types.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

namespace gaf {

// IPv4/IPv6 prefix. Addresses are stored as 16 bytes (IPv4 mapped into the
// low 4) with a bit count relative to the address family.
struct CidrRange {
  std::array<uint8_t, 16> bytes{};
  int prefix_bits = 0;
  bool v6 = false;

  static std::optional<CidrRange> parse(std::string_view text);
  bool contains(const CidrRange& addr) const;  // addr must be a /32 or /128 host
};

std::optional<CidrRange> parse_address(std::string_view text);

enum class TokenCostMode : uint8_t { PerRequest = 0, PerPromptToken = 1 };

struct RateTier {
  double capacity = 60.0;      // tokens
  double refill_per_s = 1.0;   // tokens per second
  TokenCostMode cost_mode = TokenCostMode::PerRequest;
};

struct NetworkPolicy {
  LayerMode mode = LayerMode::Enforce;
  std::vector<CidrRange> ip_deny;
  std::optional<std::vector<CidrRange>> ip_allow;  // allow-list mode when set
  std::map<std::string, RateTier> rate_tiers;
  std::string default_rate_tier = "standard";
  int max_concurrent_streams = 64;
  bool trust_forwarded_for = false;
};

struct BucketState {
  double tokens = 0.0;
  double last_refill = 0.0;  // seconds on the engine clock
};

// Perimeter source check: deny ranges, optional allow-list mode. Malformed
// addresses fail closed.
Verdict admit_source(std::string_view client_address, const NetworkPolicy& policy);

// Pure token-bucket transition. Refills from last_refill to now, then either
// spends `cost` (Allow) or leaves the refilled balance untouched (Block).
std::pair<Verdict, BucketState> check_rate(std::string_view key, double cost, double now,
                                           BucketState state, const RateTier& tier);

// Keyed bucket store with per-key mutual exclusion. Buckets start full.
class RateLimiter {
 public:
  Verdict check(const std::string& key, double cost, double now, const RateTier& tier);
  std::optional<BucketState> peek(const std::string& key) const;

 private:
  struct Entry {
    std::mutex mu;
    BucketState state;
    bool initialized = false;
  };
  mutable std::mutex map_mu_;
  std::map<std::string, std::unique_ptr<Entry>> buckets_;
};

}  // namespace gaf
