#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace guikit {

// Trims, collapses internal whitespace runs to one space and folds ASCII case.
std::string normalize_text(std::string_view s);

// Decodes UTF-8 into code points; invalid bytes map to U+FFFD.
std::u32string decode_utf8(std::string_view s);

// Edit distance over code points (insert/delete/substitute, unit cost).
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);

// 100 * (max_len - lev) / max_len over normalize_text()'d inputs; 100 when both are
// empty.
double similarity_ratio(std::string_view a, std::string_view b);

std::vector<std::string> split(std::string_view s, char sep);

}  // namespace guikit
