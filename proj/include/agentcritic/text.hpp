#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace agentcritic::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

// Trimmed and case-folded; the key used for exact action matching.
std::string fold(std::string_view s);

std::vector<std::string_view> split_whitespace(std::string_view s);

} // namespace agentcritic::text
