#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace claimaudit {

std::array<std::uint8_t, 32> sha256(std::string_view data);
std::string sha256_hex(std::string_view data);

std::string_view trim(std::string_view s);
bool is_blank(std::string_view s);
std::string to_lower(std::string_view s);

// Splits on runs of ASCII whitespace.
std::vector<std::string> whitespace_tokens(std::string_view s);
std::size_t count_whitespace_tokens(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Lowercase, collapse whitespace runs to one space, trim, drop trailing
// sentence punctuation. Used where texts are compared loosely.
std::string normalize_for_comparison(std::string_view s);

}  // namespace claimaudit
