#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace msmi {

enum class TokenizerMode { CharNgram, Word };

struct TokenizerConfig {
  TokenizerMode mode = TokenizerMode::CharNgram;
  int ngram_min = 1;  // char_ngram mode only
  int ngram_max = 2;
  bool lowercase = true;

  friend bool operator==(const TokenizerConfig&, const TokenizerConfig&) = default;
};

/// char_ngram mode: all contiguous code-point n-grams for n in
/// [ngram_min, ngram_max] over the whitespace-normalized text (runs of
/// whitespace collapse to one space). Word mode: split on whitespace, strip
/// leading/trailing punctuation. Empty text yields an empty sequence.
std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config);

}  // namespace msmi
