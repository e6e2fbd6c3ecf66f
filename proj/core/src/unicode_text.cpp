#include "eventcast/unicode_text.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <array>
#include <cstdint>

namespace eventcast {

namespace {

bool starts_with_ci(std::string_view text, std::size_t pos, std::string_view prefix) {
  if (text.size() - pos < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    char c = text[pos + i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c != prefix[i]) return false;
  }
  return true;
}

// Scalar at byte offset `pos`; advances `pos`.
char32_t next_scalar(std::string_view text, std::size_t& pos) {
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(text.data());
  const auto length = static_cast<std::int32_t>(text.size());
  auto i = static_cast<std::int32_t>(pos);
  UChar32 c = 0;
  U8_NEXT(bytes, i, length, c);
  pos = static_cast<std::size_t>(i);
  return c < 0 ? U'\uFFFD' : static_cast<char32_t>(c);
}

void append_utf8(std::string& out, char32_t c) {
  if (c < 0x80) {
    out.push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (c >> 6)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else if (c < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (c >> 12)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (c >> 18)));
    out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  }
}

bool is_mention_char(char32_t c) {
  return c == U'_' || is_letter(c) || u_isdigit(static_cast<UChar32>(c));
}

std::string lowercase(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char32_t c = next_scalar(text, pos);
    append_utf8(out, static_cast<char32_t>(u_tolower(static_cast<UChar32>(c))));
  }
  return out;
}

std::string strip_mentions(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  char32_t previous = U' ';
  while (pos < text.size()) {
    const std::size_t start = pos;
    const char32_t c = next_scalar(text, pos);
    if (c == U'@' && !is_mention_char(previous)) {
      std::size_t scan = pos;
      std::size_t name_end = pos;
      while (scan < text.size()) {
        std::size_t probe = scan;
        if (!is_mention_char(next_scalar(text, probe))) break;
        scan = probe;
        name_end = probe;
      }
      if (name_end > pos) {
        pos = name_end;
        previous = U' ';
        continue;
      }
    }
    out.append(text.substr(start, pos - start));
    previous = c;
  }
  return out;
}

std::string normalize_once(std::string_view text) {
  return collapse_white_space(strip_mentions(strip_urls(lowercase(text))));
}

}  // namespace

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) out.push_back(next_scalar(text, pos));
  return out;
}

std::string encode_utf8(std::u32string_view scalars) {
  std::string out;
  out.reserve(scalars.size());
  for (char32_t c : scalars) append_utf8(out, c);
  return out;
}

std::size_t scalar_count(std::string_view text) {
  std::size_t n = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    next_scalar(text, pos);
    ++n;
  }
  return n;
}

std::string scalar_prefix(std::string_view text, std::size_t n) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n && pos < text.size(); ++i) next_scalar(text, pos);
  return std::string(text.substr(0, pos));
}

bool is_white_space(char32_t c) {
  return u_isUWhiteSpace(static_cast<UChar32>(c)) != 0;
}

bool is_letter(char32_t c) {
  return (U_GET_GC_MASK(static_cast<UChar32>(c)) & U_GC_L_MASK) != 0;
}

bool is_emoji_or_symbol(char32_t c) {
  const auto cp = static_cast<UChar32>(c);
  const auto mask = U_GET_GC_MASK(cp);
  if ((mask & (U_GC_SO_MASK | U_GC_SK_MASK)) != 0) return true;
  // The Emoji property also covers ASCII digits, '#' and '*' (keycap bases).
  if (cp < 0x80) return false;
  return u_hasBinaryProperty(cp, UCHAR_EMOJI) || u_hasBinaryProperty(cp, UCHAR_EXTENDED_PICTOGRAPHIC) ||
         u_hasBinaryProperty(cp, UCHAR_EMOJI_COMPONENT);
}

bool is_punctuation(char32_t c) {
  return u_ispunct(static_cast<UChar32>(c)) != 0;
}

std::string trim(std::string_view text) {
  const std::u32string scalars = decode_utf8(text);
  std::size_t b = 0;
  std::size_t e = scalars.size();
  while (b < e && is_white_space(scalars[b])) ++b;
  while (e > b && is_white_space(scalars[e - 1])) --e;
  return encode_utf8(std::u32string_view(scalars).substr(b, e - b));
}

std::string collapse_white_space(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t start = pos;
    const char32_t c = next_scalar(text, pos);
    if (is_white_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.append(text.substr(start, pos - start));
  }
  return out;
}

std::vector<UrlSpan> find_urls(std::string_view text) {
  static constexpr std::array<std::string_view, 3> kPrefixes{"http://", "https://", "www."};
  std::vector<UrlSpan> spans;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const bool url = std::any_of(kPrefixes.begin(), kPrefixes.end(),
                                 [&](std::string_view p) { return starts_with_ci(text, pos, p); });
    if (!url) {
      next_scalar(text, pos);
      continue;
    }
    const std::size_t begin = pos;
    while (pos < text.size()) {
      std::size_t probe = pos;
      if (is_white_space(next_scalar(text, probe))) break;
      pos = probe;
    }
    spans.push_back({begin, pos});
  }
  return spans;
}

std::string strip_urls(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t cursor = 0;
  for (const UrlSpan& span : find_urls(text)) {
    out.append(text.substr(cursor, span.begin - cursor));
    cursor = span.end;
  }
  out.append(text.substr(cursor));
  return out;
}

std::string normalize_text(std::string_view text) {
  std::string current = normalize_once(text);
  // Removing a mention can splice a new URL or mention together; iterate to a fixed point.
  for (;;) {
    std::string next = normalize_once(current);
    if (next == current) return current;
    current = std::move(next);
  }
}

}  // namespace eventcast
