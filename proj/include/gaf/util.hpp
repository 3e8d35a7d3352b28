#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gaf {

// Logical clock used by all stateful layers. Injected so that tests and the
// in-process bench replay can step time deterministically.
using Clock = std::function<double()>;  // seconds since an arbitrary epoch

Clock system_clock_seconds();

// Wall-clock microseconds for audit records.
int64_t unix_micros_now();

std::string to_lower(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string trim(std::string_view s);

// Whitespace-delimited token count; the prompt-token approximation used by
// per_prompt_token rate tiers.
size_t whitespace_token_count(std::string_view text);

bool is_valid_utf8(std::string_view text);

// Decodes one UTF-8 codepoint starting at `i`; advances `i` past it.
// Invalid sequences yield the raw byte value and advance by one.
uint32_t utf8_decode(std::string_view s, size_t& i);
void utf8_encode(uint32_t cp, std::string& out);

std::optional<std::string> base64_decode(std::string_view in);
std::optional<std::string> hex_decode(std::string_view in);

// Fraction of bytes that are printable ASCII or common whitespace.
double printable_ratio(std::string_view bytes);

uint64_t fnv1a64(std::string_view data);
std::string fnv1a64_hex(std::string_view data);

// Salted SHA-256, hex-encoded. Credential material is only ever stored in
// this form.
std::string sha256_hex(std::string_view data);

std::string random_id(std::string_view prefix);

}  // namespace gaf
