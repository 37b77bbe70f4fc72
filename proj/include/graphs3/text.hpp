#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace graphs3 {

// ASCII casefold, trim, and collapse internal whitespace runs to one space.
// Bytes >= 0x80 pass through untouched so UTF-8 names stay intact.
std::string normalize_name(std::string_view text);

// normalize_name plus stripping of leading/trailing punctuation. Used
// identically by retention and evaluation.
std::string normalize_answer(std::string_view text);

std::string_view trim(std::string_view text);

// Python-style repr of a string: single quotes unless the text has a single
// quote and no double quote.
std::string python_repr(std::string_view text);

// "['a', 'b']"
std::string python_list_repr(const std::vector<std::string>& items);

// Lowercase alphanumeric tokens; '_' and any other non-alnum byte split.
std::vector<std::string> word_tokens(std::string_view text);

std::uint64_t fnv1a64(std::string_view text);

}  // namespace graphs3
