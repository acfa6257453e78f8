#include "trollscope/text.hpp"

#include "trollscope/error.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <iterator>
#include <charconv>
#include <chrono>
#include <cstdio>

namespace trollscope {

namespace {

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string to_nfc(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) return std::string(s);
  icu::UnicodeString in = icu::UnicodeString::fromUTF8(
      icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  icu::UnicodeString out = nfc->normalize(in, status);
  if (U_FAILURE(status)) return std::string(s);
  std::string result;
  out.toUTF8String(result);
  return result;
}

// NLTK English stopwords with three or more letters.
constexpr std::string_view kStopwords[] = {
    "about", "above", "after", "again", "against", "ain", "all", "and", "any",
    "are", "aren", "because", "been", "before", "being", "below", "between",
    "both", "but", "can", "couldn", "did", "didn", "does", "doesn", "doing",
    "don", "down", "during", "each", "few", "for", "from", "further", "had",
    "hadn", "has", "hasn", "have", "haven", "having", "her", "here", "hers",
    "herself", "him", "himself", "his", "how", "into", "isn", "its", "itself",
    "just", "mightn", "more", "most", "mustn", "myself", "needn", "nor", "not",
    "now", "off", "once", "only", "other", "our", "ours", "ourselves", "out",
    "over", "own", "same", "shan", "she", "should", "shouldn", "some", "such",
    "than", "that", "the", "their", "theirs", "them", "themselves", "then",
    "there", "these", "they", "this", "those", "through", "too", "under",
    "until", "very", "was", "wasn", "were", "weren", "what", "when",
    "where", "which", "while", "who", "whom", "why", "will", "with", "won",
    "wouldn", "you", "your", "yours", "yourself", "yourselves",
};

}  // namespace

std::string normalize_title(std::string_view title) {
  bool ascii = std::all_of(title.begin(), title.end(),
                           [](char c) { return static_cast<unsigned char>(c) < 0x80; });
  std::string nfc = ascii ? std::string(title) : to_nfc(title);
  std::string out;
  out.reserve(nfc.size());
  bool pending_space = false;
  for (char c : nfc) {
    if (is_ascii_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

bool is_stopword(std::string_view w) {
  static const std::vector<std::string_view> sorted = [] {
    std::vector<std::string_view> v(std::begin(kStopwords), std::end(kStopwords));
    std::sort(v.begin(), v.end());
    return v;
  }();
  return std::binary_search(sorted.begin(), sorted.end(), w);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  bool alphabetic = true;
  auto flush = [&] {
    if (cur.size() >= 3 && alphabetic && !is_stopword(cur)) tokens.push_back(cur);
    cur.clear();
    alphabetic = true;
  };
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    bool alpha = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    bool digit = c >= '0' && c <= '9';
    if (alpha || digit) {
      cur.push_back(static_cast<char>(alpha ? (c | 0x20) : c));
      alphabetic = alphabetic && alpha;
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::string format_day(std::int64_t day) {
  using namespace std::chrono;
  year_month_day ymd{sys_days{days{day}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::int64_t parse_day(std::string_view text) {
  using namespace std::chrono;
  int y = 0;
  unsigned m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' ||
      std::from_chars(text.data(), text.data() + 4, y).ec != std::errc{} ||
      std::from_chars(text.data() + 5, text.data() + 7, m).ec != std::errc{} ||
      std::from_chars(text.data() + 8, text.data() + 10, d).ec != std::errc{})
    throw Error(ErrorCode::InvalidArgument, "bad day: " + std::string(text));
  year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) throw Error(ErrorCode::InvalidArgument, "bad day: " + std::string(text));
  return sys_days{ymd}.time_since_epoch().count();
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_ascii_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_ascii_space(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace trollscope
