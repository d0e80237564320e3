#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace triagekit {

// Whitespace-split token count. This is the length proxy used everywhere a
// token budget or token cost appears; any monotone proxy preserves the
// budget semantics.
int token_count(std::string_view text);

// Maximal non-whitespace runs, in order.
std::vector<std::string_view> tokenize(std::string_view text);

// Lowercase copy.
std::string to_lower(std::string_view s);

// Lowercase and strip leading/trailing non-alphanumeric characters.
// "Ransomware," -> "ransomware". Used by the keyword scorer and router.
std::string normalize_word(std::string_view word);

// Case-insensitive glob with `*` and `?`. Anchored at both ends.
bool glob_match_ci(std::string_view pattern, std::string_view text);

// FNV-1a, the stable 64-bit content hash used for derived ids and seeds.
std::uint64_t fnv1a64(std::string_view data);

}  // namespace triagekit
