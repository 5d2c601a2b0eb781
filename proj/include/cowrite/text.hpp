#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace cowrite {

// A word is a maximal run of non-whitespace bytes. Every module counts
// words this way.
std::vector<std::string> split_words(std::string_view text);
std::size_t count_words(std::string_view text);
std::string join_words(const std::vector<std::string>& words, std::string_view sep = " ");

// Collapses every whitespace run to one space and trims both ends.
std::string normalize_whitespace(std::string_view text);

std::string_view trim_right(std::string_view text);
bool is_space(char c);

// Lowercases ASCII letters and the German uppercase umlauts (Ä Ö Ü).
// The result has the same byte length as the input, so offsets found in
// the folded copy are valid in the original.
std::string fold_case(std::string_view text);

// Stable 64-bit FNV-1a digest rendered as 16 lowercase hex digits.
std::string text_hash(std::string_view text);

}  // namespace cowrite
