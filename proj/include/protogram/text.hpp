#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared by the extraction modules.
namespace protogram::text {

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
std::string collapse_spaces(std::string_view s);
std::vector<std::string> split_words(std::string_view s);
bool contains_ci(std::string_view haystack, std::string_view needle);
bool equals_ci(std::string_view a, std::string_view b);
bool is_punct_char(char c);
bool has_digit(std::string_view s);
std::size_t leading_spaces(std::string_view line);
std::size_t levenshtein(std::string_view a, std::string_view b);

// Deterministic, platform-independent helpers on top of a 64-bit generator.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace protogram::text
