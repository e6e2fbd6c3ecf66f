#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace eventcast {

/// Decodes UTF-8 into Unicode scalar values. Malformed sequences decode to U+FFFD.
std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view scalars);

/// Number of Unicode scalar values in `text`.
std::size_t scalar_count(std::string_view text);

/// The first `n` scalar values of `text`, cut on a scalar boundary.
std::string scalar_prefix(std::string_view text, std::size_t n);

bool is_white_space(char32_t c);
bool is_letter(char32_t c);
/// General category So/Sk or the Unicode Emoji / Extended_Pictographic properties.
bool is_emoji_or_symbol(char32_t c);
bool is_punctuation(char32_t c);

/// Trims leading and trailing Unicode white space.
std::string trim(std::string_view text);

/// Collapses every run of white space into one ASCII space and trims the ends.
std::string collapse_white_space(std::string_view text);

/// Byte range [begin, end) of one URL inside a string.
struct UrlSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// URL tokens: an ASCII case-insensitive "http://", "https://" or "www." prefix,
/// extending to the next white space (or the end of the text).
std::vector<UrlSpan> find_urls(std::string_view text);

/// `text` with every URL token removed.
std::string strip_urls(std::string_view text);

/// Lowercases, removes URLs and @mentions, collapses white space.
/// Idempotent: normalize_text(normalize_text(x)) == normalize_text(x).
std::string normalize_text(std::string_view text);

}  // namespace eventcast
