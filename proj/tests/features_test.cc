#include "stacksum/features.h"

#include <gtest/gtest.h>

#include <random>

#include "oracles.h"
#include "stacksum/error.h"

namespace stacksum {
namespace {

Tokens toks(std::initializer_list<const char*> list) { return Tokens(list.begin(), list.end()); }

TEST(Features, VerbatimSentenceIsFullyExtractive) {
  const auto doc = make_document("d", {toks({"the", "mayor", "opened", "a", "bridge", "."}),
                                       toks({"crowds", "cheered", "loudly", "."})});
  const auto cand = make_candidate({doc.sentences[1].tokens}, "x");
  const auto f = extract_features(doc, cand);
  EXPECT_DOUBLE_EQ(f[kCoverage], 1.0);
  EXPECT_DOUBLE_EQ(f[kDensity], 4.0);
  EXPECT_DOUBLE_EQ(f[kCopyLen], 4.0);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(f[kNovelty1 + k], 0.0);
  EXPECT_DOUBLE_EQ(f[kFusionRatio], 0.0);
}

TEST(Features, CompressionRatio) {
  Tokens doc_tokens;
  for (int i = 0; i < 100; ++i) doc_tokens.push_back("w" + std::to_string(i));
  const auto doc = make_document("d", {doc_tokens});
  const auto cand = make_candidate({Tokens(doc_tokens.begin(), doc_tokens.begin() + 25)}, "x");
  const auto f = extract_features(doc, cand);
  EXPECT_DOUBLE_EQ(f[kCompression], 4.0);
  EXPECT_DOUBLE_EQ(f[kDocLen], 100.0);
  EXPECT_DOUBLE_EQ(f[kCandLen], 25.0);
}

TEST(Features, RepetitionCounts) {
  const auto doc = make_document("d", {toks({"a", "b"})});
  const auto f = extract_features(doc, make_candidate({toks({"the", "cat", "the", "cat"})}, "x"));
  EXPECT_NEAR(f[kRepetition2], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(f[kRepetition1], 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(f[kRepetition4], 0.0);
  EXPECT_DOUBLE_EQ(f[kNovelty1], 1.0);
  EXPECT_DOUBLE_EQ(f[kCoverage], 0.0);
}

TEST(Features, FusionCountsCrossSentenceStitching) {
  const auto doc = make_document("d", {toks({"a", "b", "c"}), toks({"d", "e", "f"})});
  const auto cand = make_candidate({toks({"a", "b", "e", "f"}), toks({"d", "e"})}, "x");
  const auto f = extract_features(doc, cand);
  EXPECT_DOUBLE_EQ(f[kFusionRatio], 0.5);
}

TEST(Fragments, TakesLongestMatchEvenInsideEarlierRun) {
  const auto frags = extractive_fragments(toks({"a", "a", "b"}), toks({"a", "a", "a", "b"}));
  ASSERT_EQ(frags.size(), 1u);
  EXPECT_EQ(frags[0].length, 3u);
  EXPECT_EQ(frags[0].document_start, 1u);
}

TEST(Fragments, GreedyMatchesExhaustiveFactorization) {
  std::mt19937 rng(17);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e", "f"};
  std::uniform_int_distribution<int> word(0, 5), doc_len(1, 30), cand_len(1, 12);
  for (int trial = 0; trial < 400; ++trial) {
    Tokens doc, cand;
    for (int i = doc_len(rng); i > 0; --i) doc.push_back(vocab[static_cast<std::size_t>(word(rng))]);
    for (int i = cand_len(rng); i > 0; --i) cand.push_back(vocab[static_cast<std::size_t>(word(rng))]);

    const auto frags = extractive_fragments(cand, doc);
    std::size_t covered = 0, expected_start = 0, pieces = 0;
    for (const auto& f : frags) {
      ASSERT_GE(f.candidate_start, expected_start);
      pieces += f.candidate_start - expected_start;  // uncopied tokens before it
      for (std::size_t t = 0; t < f.length; ++t) {
        ASSERT_EQ(cand[f.candidate_start + t], doc[f.document_start + t]);
      }
      covered += f.length;
      expected_start = f.candidate_start + f.length;
      ++pieces;
    }
    pieces += cand.size() - expected_start;
    EXPECT_EQ(pieces, testing::min_factorization(cand, doc));

    std::size_t present = 0;
    for (const auto& t : cand) present += std::find(doc.begin(), doc.end(), t) != doc.end();
    EXPECT_EQ(covered, present);
  }
}

TEST(Features, CsvRendering) {
  EXPECT_EQ(feature_csv_header().substr(0, 16), "doc_len,cand_len");
  FeatureVector f;
  f[0] = 0.5;
  const auto row = feature_csv_row(f);
  EXPECT_EQ(row.substr(0, 4), "0.5,");
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), static_cast<long>(kFeatureCount - 1));
}

}  // namespace
}  // namespace stacksum
