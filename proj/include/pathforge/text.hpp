#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

// Unicode helpers backed by ICU. All inputs and outputs are UTF-8.
namespace pathforge::text {

bool is_valid_utf8(std::string_view s);

std::string to_nfc(std::string_view s);

std::size_t codepoint_length(std::string_view s);

// Trim ASCII and Unicode whitespace.
std::string trim(std::string_view s);

// Maximal runs of alphanumeric code points, NFC-normalized and case-folded.
std::vector<std::string> words(std::string_view s);

// Distinct words of at least three code points.
std::set<std::string> content_tokens(std::string_view s);

// Case-fold + NFC of a whole string (used for marker comparison).
std::string fold(std::string_view s);

}  // namespace pathforge::text
