#include "stacksum/text.h"

#include <algorithm>
#include <cstdint>
#include <utility>

#include "stacksum/error.h"

namespace stacksum {
namespace {

constexpr char kNgramSeparator = '\x1f';

struct CodePoint {
  char32_t value;
  std::size_t offset;
  std::size_t length;
};

std::vector<CodePoint> decode_utf8(std::string_view text) {
  std::vector<CodePoint> out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (lead < 0x80) {
      len = 1;
      cp = lead;
    } else if ((lead & 0xE0) == 0xC0) {
      len = 2;
      cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
      len = 3;
      cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
      len = 4;
      cp = lead & 0x07;
    } else {
      throw Error("invalid utf-8 at byte " + std::to_string(i));
    }
    if (i + len > text.size()) {
      throw Error("invalid utf-8 at byte " + std::to_string(i));
    }
    for (std::size_t k = 1; k < len; ++k) {
      const auto cont = static_cast<unsigned char>(text[i + k]);
      if ((cont & 0xC0) != 0x80) {
        throw Error("invalid utf-8 at byte " + std::to_string(i + k));
      }
      cp = (cp << 6) | (cont & 0x3F);
    }
    // Reject overlong forms and anything outside the scalar-value range.
    static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      throw Error("invalid utf-8 at byte " + std::to_string(i));
    }
    out.push_back({cp, i, len});
    i += len;
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_space(char32_t c) {
  if (c == ' ' || (c >= 0x09 && c <= 0x0D)) return true;
  switch (c) {
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

bool is_punct(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
           (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
  }
  return (c >= 0xA1 && c <= 0xBF) || c == 0xD7 || c == 0xF7 ||
         (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) ||
         (c >= 0x3001 && c <= 0x303F);
}

bool is_digit(char32_t c) { return c >= '0' && c <= '9'; }

// Simple case folding for ASCII, Latin-1, Greek and basic Cyrillic.
char32_t to_lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 0x20;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 0x20;
  if (c >= 0x410 && c <= 0x42F) return c + 0x20;
  if (c >= 0x400 && c <= 0x40F) return c + 0x50;
  return c;
}

struct RawToken {
  std::string text;
  bool followed_by_space;
};

std::vector<RawToken> split_tokens(std::string_view text) {
  const auto cps = decode_utf8(text);
  std::vector<RawToken> out;
  std::string current;
  auto flush = [&](bool space_after) {
    if (!current.empty()) {
      out.push_back({std::move(current), space_after});
      current.clear();
    }
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t c = cps[i].value;
    const bool next_is_space = i + 1 >= cps.size() || is_space(cps[i + 1].value);
    if (is_space(c)) {
      flush(true);
      continue;
    }
    // Decimal points and thousands separators stay inside numbers.
    const bool numeric_joiner = (c == '.' || c == ',') && i > 0 && i + 1 < cps.size() &&
                                is_digit(cps[i - 1].value) && is_digit(cps[i + 1].value) &&
                                !current.empty();
    if (is_punct(c) && !numeric_joiner) {
      flush(false);
      std::string p;
      append_utf8(p, c);
      out.push_back({std::move(p), next_is_space});
      continue;
    }
    append_utf8(current, to_lower(c));
    if (next_is_space) flush(true);
  }
  flush(true);
  return out;
}

bool is_terminator(const std::string& token, const TokenizerConfig& config) {
  return token.size() == 1 && config.terminators.find(token[0]) != std::string::npos;
}

// True when the tokens ending at `end` (inclusive) concatenate to one of the
// configured abbreviations.
template <typename GetToken>
bool ends_abbreviation(std::size_t end, GetToken&& token_at, const TokenizerConfig& config) {
  for (const auto& abbr : config.abbreviations) {
    std::string suffix;
    std::size_t i = end + 1;
    while (i > 0 && suffix.size() < abbr.size()) {
      --i;
      suffix.insert(0, token_at(i));
    }
    if (suffix == abbr) return true;
  }
  return false;
}

}  // namespace

Tokens tokenize_words(std::string_view text) {
  Tokens out;
  for (auto& t : split_tokens(text)) out.push_back(std::move(t.text));
  return out;
}

Document tokenize(std::string_view text, const TokenizerConfig& config, std::string doc_id) {
  const auto raw = split_tokens(text);
  if (raw.empty()) throw Error("empty document");

  Document doc;
  doc.doc_id = std::move(doc_id);
  Sentence current;
  auto token_at = [&](std::size_t i) -> const std::string& { return raw[i].text; };
  for (std::size_t i = 0; i < raw.size(); ++i) {
    current.tokens.push_back(raw[i].text);
    const bool boundary = raw[i].followed_by_space && is_terminator(raw[i].text, config) &&
                          !ends_abbreviation(i, token_at, config);
    if (boundary || i + 1 == raw.size()) {
      current.index = doc.sentences.size();
      doc.sentences.push_back(std::move(current));
      current = Sentence{};
    }
  }
  for (const auto& s : doc.sentences) {
    doc.tokens.insert(doc.tokens.end(), s.tokens.begin(), s.tokens.end());
  }
  return doc;
}

Document tokenize_sentences(std::span<const std::string> sentences, const TokenizerConfig&,
                            std::string doc_id) {
  std::vector<Tokens> split;
  split.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    auto tokens = tokenize_words(sentences[i]);
    if (tokens.empty()) throw Error("empty sentence at index " + std::to_string(i));
    split.push_back(std::move(tokens));
  }
  if (split.empty()) throw Error("empty document");
  return make_document(std::move(doc_id), std::move(split));
}

Document make_document(std::string doc_id, std::vector<Tokens> sentences) {
  if (sentences.empty()) throw Error("empty document");
  Document doc;
  doc.doc_id = std::move(doc_id);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (sentences[i].empty()) throw Error("empty sentence at index " + std::to_string(i));
    doc.tokens.insert(doc.tokens.end(), sentences[i].begin(), sentences[i].end());
    doc.sentences.push_back({i, std::move(sentences[i])});
  }
  return doc;
}

std::string detokenize(const Document& doc, const TokenizerConfig& config) {
  std::string out;
  std::size_t flat = 0;
  auto token_at = [&](std::size_t i) -> const std::string& { return doc.tokens[i]; };
  for (const auto& sentence : doc.sentences) {
    for (std::size_t t = 0; t < sentence.tokens.size(); ++t, ++flat) {
      const auto& tok = sentence.tokens[t];
      out += tok;
      if (flat + 1 == doc.tokens.size()) break;
      const bool last_in_sentence = t + 1 == sentence.tokens.size();
      // An interior terminator was not followed by whitespace in the source
      // text unless it closed an abbreviation.
      const bool glue = !last_in_sentence && is_terminator(tok, config) &&
                        !ends_abbreviation(flat, token_at, config);
      if (!glue) out.push_back(' ');
    }
  }
  return out;
}

std::string join(std::span<const std::string> tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

std::vector<Tokens> ngrams(std::span<const std::string> tokens, std::size_t k) {
  if (k == 0) throw Error("n-gram order must be positive");
  std::vector<Tokens> out;
  if (tokens.size() < k) return out;
  out.reserve(tokens.size() - k + 1);
  for (std::size_t i = 0; i + k <= tokens.size(); ++i) {
    out.emplace_back(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                     tokens.begin() + static_cast<std::ptrdiff_t>(i + k));
  }
  return out;
}

NgramCounts ngram_counts(std::span<const std::string> tokens, std::size_t k) {
  if (k == 0) throw Error("n-gram order must be positive");
  NgramCounts counts;
  if (tokens.size() < k) return counts;
  std::string key;
  for (std::size_t i = 0; i + k <= tokens.size(); ++i) {
    key.clear();
    for (std::size_t j = 0; j < k; ++j) {
      if (j) key.push_back(kNgramSeparator);
      key += tokens[i + j];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace stacksum
