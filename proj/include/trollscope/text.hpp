#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace trollscope {

/// NFC, trimmed, internal whitespace runs collapsed to one space. Case is kept.
std::string normalize_title(std::string_view title);

/// Number of UTF-8 code points (invalid bytes count as one each).
std::size_t utf8_length(std::string_view s);

/// Lowercase, split on non-alphanumeric ASCII, keep purely alphabetic tokens
/// of length >= 3 that are not English stopwords.
std::vector<std::string> tokenize(std::string_view text);

bool is_stopword(std::string_view lowercase_word);

/// Days since 1970-01-01 (floor division, so negative times round down).
inline std::int64_t utc_day(std::int64_t utc_seconds) {
  std::int64_t d = utc_seconds / 86400;
  if (utc_seconds % 86400 < 0) --d;
  return d;
}

/// "YYYY-MM-DD" for a day number.
std::string format_day(std::int64_t day);
/// Inverse of format_day; throws Error(InvalidArgument) on bad input.
std::int64_t parse_day(std::string_view text);

/// Stable 64-bit FNV-1a, used for content addressing.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

/// Shortest text that round-trips the double exactly.
std::string format_double(double v);

std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

}  // namespace trollscope
