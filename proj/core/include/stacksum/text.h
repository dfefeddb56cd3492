#ifndef STACKSUM_TEXT_H_
#define STACKSUM_TEXT_H_

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stacksum {

using Tokens = std::vector<std::string>;

struct Sentence {
  std::size_t index = 0;
  Tokens tokens;
};

// A tokenized text with sentence boundaries. `tokens` is always the
// concatenation of the sentence token lists.
struct Document {
  std::string doc_id;
  std::vector<Sentence> sentences;
  Tokens tokens;

  std::size_t size() const { return tokens.size(); }
};

struct TokenizerConfig {
  std::string terminators = ".!?";
  // Lowercased, written without spaces ("e.g.", "dr.").
  std::vector<std::string> abbreviations = {
      "dr.", "mr.", "mrs.", "ms.", "prof.", "st.", "jr.", "sr.",
      "vs.", "etc.", "e.g.", "i.e.", "inc.", "no.", "u.s."};
};

// Lowercased word and punctuation tokens. A sentence ends at a terminator
// followed by whitespace (or end of text), unless the tokens ending at that
// terminator spell a configured abbreviation.
Document tokenize(std::string_view text, const TokenizerConfig& config = {},
                  std::string doc_id = {});

// Tokenizes pre-segmented sentences without re-splitting them.
Document tokenize_sentences(std::span<const std::string> sentences,
                            const TokenizerConfig& config = {},
                            std::string doc_id = {});

// Splits one string into tokens only; no sentence segmentation.
Tokens tokenize_words(std::string_view text);

// Renders a document back to text such that tokenize(detokenize(d))
// reproduces d's sentences and tokens.
std::string detokenize(const Document& doc, const TokenizerConfig& config = {});

// Builds a Document from already-tokenized sentences. Empty sentences are
// rejected.
Document make_document(std::string doc_id, std::vector<Tokens> sentences);

std::string join(std::span<const std::string> tokens, std::string_view sep = " ");

// k-grams in order with multiplicity.
std::vector<Tokens> ngrams(std::span<const std::string> tokens, std::size_t k);

// k-gram -> count. Keys are the k tokens joined with a '\x1f' separator.
using NgramCounts = std::map<std::string, std::size_t>;
NgramCounts ngram_counts(std::span<const std::string> tokens, std::size_t k);

}  // namespace stacksum

#endif  // STACKSUM_TEXT_H_
