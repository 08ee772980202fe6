#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vs::unicode {

using Codepoint = std::uint32_t;

/// Returns the byte offset of the first invalid UTF-8 sequence, or nullopt
/// if the whole string is valid.
std::optional<std::size_t> find_invalid_utf8(std::string_view text);

/// Decodes valid UTF-8 into code points. Throws InputFormatError naming the
/// byte offset on invalid input.
std::vector<Codepoint> decode_utf8(std::string_view text);

void append_utf8(std::string& out, Codepoint cp);
std::string encode_utf8(const std::vector<Codepoint>& cps);

/// Number of code points in a valid UTF-8 string.
std::size_t codepoint_count(std::string_view text);

bool is_whitespace(Codepoint cp);

/// Per-code-point NFKC compatibility mapping (identity for unmapped points).
/// Compositions across code-point boundaries are not performed.
std::string nfkc(std::string_view text);

std::string lowercase(std::string_view text);

}  // namespace vs::unicode
