#include "gaf/network.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <cstdio>

namespace gaf {

std::optional<CidrRange> CidrRange::parse(std::string_view text) {
  std::string addr_part(text);
  int bits = -1;
  if (size_t slash = addr_part.find('/'); slash != std::string::npos) {
    std::string bits_part = addr_part.substr(slash + 1);
    addr_part = addr_part.substr(0, slash);
    if (bits_part.empty() || bits_part.size() > 3) return std::nullopt;
    for (char c : bits_part) {
      if (c < '0' || c > '9') return std::nullopt;
    }
    bits = std::stoi(bits_part);
  }
  CidrRange out;
  in_addr v4{};
  in6_addr v6{};
  if (inet_pton(AF_INET, addr_part.c_str(), &v4) == 1) {
    out.v6 = false;
    std::copy_n(reinterpret_cast<const uint8_t*>(&v4.s_addr), 4, out.bytes.begin());
    out.prefix_bits = bits < 0 ? 32 : bits;
    if (out.prefix_bits > 32) return std::nullopt;
    return out;
  }
  if (inet_pton(AF_INET6, addr_part.c_str(), &v6) == 1) {
    out.v6 = true;
    std::copy_n(reinterpret_cast<const uint8_t*>(v6.s6_addr), 16, out.bytes.begin());
    out.prefix_bits = bits < 0 ? 128 : bits;
    if (out.prefix_bits > 128) return std::nullopt;
    return out;
  }
  return std::nullopt;
}

bool CidrRange::contains(const CidrRange& addr) const {
  if (v6 != addr.v6) return false;
  int bits = prefix_bits;
  for (int i = 0; i < (v6 ? 16 : 4) && bits > 0; ++i) {
    int take = std::min(bits, 8);
    uint8_t mask = static_cast<uint8_t>(0xFF << (8 - take));
    if ((bytes[static_cast<size_t>(i)] & mask) !=
        (addr.bytes[static_cast<size_t>(i)] & mask)) {
      return false;
    }
    bits -= take;
  }
  return true;
}

std::optional<CidrRange> parse_address(std::string_view text) {
  // Strip a :port suffix on IPv4 forms.
  std::string s(text);
  if (s.find(':') != std::string::npos && s.find('.') != std::string::npos) {
    s = s.substr(0, s.find(':'));
  }
  auto parsed = CidrRange::parse(s);
  if (!parsed) return std::nullopt;
  if (parsed->prefix_bits != (parsed->v6 ? 128 : 32)) return std::nullopt;
  return parsed;
}

Verdict admit_source(std::string_view client_address, const NetworkPolicy& policy) {
  auto addr = parse_address(client_address);
  if (!addr) {
    return Verdict::make(Layer::Network, "builtin.addr_parse", Action::of(ActionKind::Block), 80,
                         "client address is not parseable");
  }
  for (const auto& range : policy.ip_deny) {
    if (range.contains(*addr)) {
      return Verdict::make(Layer::Network, "builtin.ip_deny", Action::of(ActionKind::Block), 80,
                           "client address in deny range");
    }
  }
  if (policy.ip_allow) {
    bool allowed = false;
    for (const auto& range : *policy.ip_allow) {
      if (range.contains(*addr)) {
        allowed = true;
        break;
      }
    }
    if (!allowed) {
      return Verdict::make(Layer::Network, "builtin.ip_deny", Action::of(ActionKind::Block), 80,
                           "client address outside allow list");
    }
  }
  return Verdict::allow(Layer::Network);
}

std::pair<Verdict, BucketState> check_rate(std::string_view key, double cost, double now,
                                           BucketState state, const RateTier& tier) {
  double elapsed = std::max(0.0, now - state.last_refill);
  state.tokens = std::min(tier.capacity, state.tokens + tier.refill_per_s * elapsed);
  state.last_refill = now;
  if (state.tokens >= cost) {
    state.tokens -= cost;
    return {Verdict::allow(Layer::Network), state};
  }
  (void)key;
  return {Verdict::make(Layer::Network, "builtin.rate", Action::of(ActionKind::Block), 70,
                        "rate limit exceeded"),
          state};
}

Verdict RateLimiter::check(const std::string& key, double cost, double now,
                           const RateTier& tier) {
  Entry* entry;
  {
    std::lock_guard<std::mutex> lock(map_mu_);
    auto& slot = buckets_[key];
    if (!slot) slot = std::make_unique<Entry>();
    entry = slot.get();
  }
  std::lock_guard<std::mutex> lock(entry->mu);
  if (!entry->initialized) {
    entry->state = BucketState{tier.capacity, now};
    entry->initialized = true;
  }
  auto [verdict, next] = check_rate(key, cost, now, entry->state, tier);
  entry->state = next;
  return verdict;
}

std::optional<BucketState> RateLimiter::peek(const std::string& key) const {
  std::lock_guard<std::mutex> lock(map_mu_);
  auto it = buckets_.find(key);
  if (it == buckets_.end() || !it->second->initialized) return std::nullopt;
  std::lock_guard<std::mutex> entry_lock(it->second->mu);
  return it->second->state;
}

}  // namespace gaf
