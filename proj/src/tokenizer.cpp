#include "msmi/tokenizer.hpp"

#include <cctype>
#include <cstdint>

namespace msmi {
namespace {

// Decodes the UTF-8 sequence starting at `i`, returning its byte length and
// code point. Invalid bytes are passed through as single-byte units.
std::size_t decode_utf8(std::string_view s, std::size_t i, char32_t& cp) {
  const auto byte = [&](std::size_t k) { return static_cast<std::uint8_t>(s[k]); };
  const std::uint8_t b0 = byte(i);
  if (b0 < 0x80) {
    cp = b0;
    return 1;
  }
  std::size_t len = 0;
  if ((b0 & 0xe0) == 0xc0) len = 2;
  else if ((b0 & 0xf0) == 0xe0) len = 3;
  else if ((b0 & 0xf8) == 0xf0) len = 4;
  if (len == 0 || i + len > s.size()) {
    cp = b0;
    return 1;
  }
  char32_t value = b0 & (0x7f >> len);
  for (std::size_t k = 1; k < len; ++k) {
    const std::uint8_t bk = byte(i + k);
    if ((bk & 0xc0) != 0x80) {
      cp = b0;
      return 1;
    }
    value = (value << 6) | (bk & 0x3f);
  }
  cp = value;
  return len;
}

bool is_space_cp(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' ||
         cp == U'\v' || cp == 0x00a0 || cp == 0x3000;
}

bool is_punct_cp(char32_t cp) {
  if (cp < 0x80) {
    return std::ispunct(static_cast<int>(cp)) != 0;
  }
  // Common CJK punctuation and full-width forms.
  switch (cp) {
    case 0x3001: case 0x3002: case 0x300c: case 0x300d: case 0x300e: case 0x300f:
    case 0x3008: case 0x3009: case 0x300a: case 0x300b: case 0x3010: case 0x3011:
    case 0xff01: case 0xff08: case 0xff09: case 0xff0c: case 0xff1a: case 0xff1b:
    case 0xff1f: case 0x2018: case 0x2019: case 0x201c: case 0x201d: case 0x2026:
      return true;
    default:
      return false;
  }
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

char32_t maybe_lower(char32_t cp, bool lowercase) {
  if (lowercase && cp < 0x80) {
    return static_cast<char32_t>(std::tolower(static_cast<int>(cp)));
  }
  return cp;
}

std::vector<char32_t> decode_normalized(std::string_view text, bool lowercase) {
  std::vector<char32_t> cps;
  cps.reserve(text.size());
  bool pending_space = false;
  std::size_t i = 0;
  while (i < text.size()) {
    char32_t cp;
    i += decode_utf8(text, i, cp);
    if (is_space_cp(cp)) {
      if (!cps.empty()) {
        pending_space = true;
      }
      continue;
    }
    if (pending_space) {
      cps.push_back(U' ');
      pending_space = false;
    }
    cps.push_back(maybe_lower(cp, lowercase));
  }
  return cps;
}

std::vector<std::string> char_ngrams(std::string_view text, const TokenizerConfig& config) {
  const std::vector<char32_t> cps = decode_normalized(text, config.lowercase);
  std::vector<std::string> grams;
  const int count = static_cast<int>(cps.size());
  for (int n = config.ngram_min; n <= config.ngram_max; ++n) {
    for (int start = 0; start + n <= count; ++start) {
      std::string gram;
      for (int k = 0; k < n; ++k) {
        append_utf8(gram, cps[start + k]);
      }
      grams.push_back(std::move(gram));
    }
  }
  return grams;
}

std::vector<std::string> words(std::string_view text, const TokenizerConfig& config) {
  std::vector<std::string> tokens;
  std::vector<char32_t> current;
  std::size_t i = 0;

  const auto flush = [&] {
    std::size_t b = 0;
    std::size_t e = current.size();
    while (b < e && is_punct_cp(current[b])) ++b;
    while (e > b && is_punct_cp(current[e - 1])) --e;
    if (e > b) {
      std::string token;
      for (std::size_t k = b; k < e; ++k) {
        append_utf8(token, maybe_lower(current[k], config.lowercase));
      }
      tokens.push_back(std::move(token));
    }
    current.clear();
  };

  while (i < text.size()) {
    char32_t cp;
    i += decode_utf8(text, i, cp);
    if (is_space_cp(cp)) {
      flush();
    } else {
      current.push_back(cp);
    }
  }
  flush();
  return tokens;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config) {
  if (text.empty()) {
    return {};
  }
  if (config.mode == TokenizerMode::CharNgram) {
    return char_ngrams(text, config);
  }
  return words(text, config);
}

}  // namespace msmi
