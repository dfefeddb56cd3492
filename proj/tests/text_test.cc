#include "stacksum/text.h"

#include <gtest/gtest.h>

#include "stacksum/error.h"

namespace stacksum {
namespace {

Tokens toks(std::initializer_list<const char*> list) { return Tokens(list.begin(), list.end()); }

TEST(Tokenize, SplitsSentencesAtTerminators) {
  const auto doc = tokenize("The cat sat. It left.");
  ASSERT_EQ(doc.sentences.size(), 2u);
  EXPECT_EQ(doc.sentences[0].tokens, toks({"the", "cat", "sat", "."}));
  EXPECT_EQ(doc.sentences[1].tokens, toks({"it", "left", "."}));
  EXPECT_EQ(doc.tokens.size(), 7u);
  EXPECT_EQ(doc.sentences[1].index, 1u);
}

TEST(Tokenize, EmptyTextIsAnError) {
  EXPECT_THROW(tokenize(""), Error);
  EXPECT_THROW(tokenize("   \n\t"), Error);
  try {
    tokenize("");
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "empty document");
  }
}

TEST(Tokenize, AbbreviationDoesNotEndSentence) {
  const auto doc = tokenize("Dr. Smith arrived.");
  ASSERT_EQ(doc.sentences.size(), 1u);
  EXPECT_EQ(doc.sentences[0].tokens.front(), "dr");

  TokenizerConfig no_abbrev;
  no_abbrev.abbreviations.clear();
  EXPECT_EQ(tokenize("Dr. Smith arrived.", no_abbrev).sentences.size(), 2u);
}

TEST(Tokenize, DottedAbbreviationAndNumbers) {
  const auto doc = tokenize("Prices rose 3.5 percent in the U.S. last year. Officials agreed.");
  ASSERT_EQ(doc.sentences.size(), 2u);
  const auto& first = doc.sentences[0].tokens;
  EXPECT_NE(std::find(first.begin(), first.end(), "3.5"), first.end());
}

TEST(Tokenize, TerminatorWithoutSpaceDoesNotSplit) {
  EXPECT_EQ(tokenize("see example.com today").sentences.size(), 1u);
}

TEST(Tokenize, RejectsInvalidUtf8) {
  const std::string bad = std::string("abc ") + static_cast<char>(0xC3);
  EXPECT_THROW(tokenize(bad), Error);
}

TEST(Tokenize, LowercasesBeyondAscii) {
  const auto words = tokenize_words("ÉCOLE Straße ΑΒΓ");
  EXPECT_EQ(words, toks({"école", "straße", "αβγ"}));
}

TEST(Tokenize, DetokenizeRoundTrips) {
  const std::vector<std::string> texts = {
      "The cat sat. It left.", "Dr. Smith arrived at 10.30 and left, quickly!",
      "Is it 3,000 or 3.000? Nobody knows... Really.", "a.b.c went home. Then \"quotes\" (and more)."};
  for (const auto& text : texts) {
    const auto doc = tokenize(text);
    const auto again = tokenize(detokenize(doc));
    ASSERT_EQ(again.sentences.size(), doc.sentences.size()) << text;
    for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
      EXPECT_EQ(again.sentences[i].tokens, doc.sentences[i].tokens) << text;
    }
  }
}

TEST(Tokenize, PresegmentedSentencesKeepBoundaries) {
  const std::vector<std::string> sentences = {"First one. Still first", "Second"};
  const auto doc = tokenize_sentences(sentences);
  ASSERT_EQ(doc.sentences.size(), 2u);
  EXPECT_EQ(doc.sentences[0].tokens.size(), 5u);  // First one . Still first
  const std::vector<std::string> with_empty = {"ok", "  "};
  EXPECT_THROW(tokenize_sentences(with_empty), Error);
}

TEST(MakeDocument, RejectsEmptySentence) {
  EXPECT_THROW(make_document("d", {toks({"a"}), {}}), Error);
  EXPECT_THROW(make_document("d", {}), Error);
  const auto doc = make_document("d", {toks({"a", "b"}), toks({"c"})});
  EXPECT_EQ(doc.tokens, toks({"a", "b", "c"}));
}

TEST(Ngrams, SlidingWindow) {
  const auto grams = ngrams(toks({"a", "b", "c"}), 2);
  ASSERT_EQ(grams.size(), 2u);
  EXPECT_EQ(grams[0], toks({"a", "b"}));
  EXPECT_EQ(grams[1], toks({"b", "c"}));
  EXPECT_TRUE(ngrams(toks({"a"}), 2).empty());
  EXPECT_THROW(ngrams(toks({"a"}), 0), Error);
}

TEST(Ngrams, CountsKeepMultiplicity) {
  const auto counts = ngram_counts(toks({"a", "b", "a", "b"}), 2);
  ASSERT_EQ(counts.size(), 2u);
  EXPECT_EQ(counts.at(std::string("a\x1f" "b")), 2u);
  EXPECT_EQ(counts.at(std::string("b\x1f" "a")), 1u);
}

}  // namespace
}  // namespace stacksum
