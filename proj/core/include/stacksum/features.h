#ifndef STACKSUM_FEATURES_H_
#define STACKSUM_FEATURES_H_

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stacksum/candidates.h"
#include "stacksum/text.h"

namespace stacksum {

inline constexpr std::size_t kFeatureCount = 18;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "doc_len",      "cand_len",      "rouge1_dc",     "rouge2_dc",     "rougeL_dc",
    "copy_len",     "frag_coverage", "frag_density",  "compression",   "novelty_1",
    "novelty_2",    "novelty_3",     "novelty_4",     "repetition_1",  "repetition_2",
    "repetition_3", "repetition_4",  "fusion_ratio"};

enum Feature : std::size_t {
  kDocLen, kCandLen, kRouge1Dc, kRouge2Dc, kRougeLDc, kCopyLen, kCoverage, kDensity,
  kCompression, kNovelty1, kNovelty2, kNovelty3, kNovelty4, kRepetition1, kRepetition2,
  kRepetition3, kRepetition4, kFusionRatio
};

struct FeatureVector {
  std::array<double, kFeatureCount> values{};

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

// A maximal span of the candidate copied verbatim from the document.
struct Fragment {
  std::size_t candidate_start = 0;
  std::size_t document_start = 0;
  std::size_t length = 0;
};

// Greedy longest-match factorization: at each candidate position take the
// longest span that occurs in the document (first occurrence on ties) and
// skip past it; unmatched tokens advance by one.
std::vector<Fragment> extractive_fragments(std::span<const std::string> candidate,
                                           std::span<const std::string> document);

// Summary features in kFeatureNames order. Most are ratios, so candidates
// of different lengths stay comparable; fusion is the share of candidate
// sentences stitched from two or more document sentences.
FeatureVector extract_features(const Document& doc, const Candidate& candidate);

std::string feature_csv_header();
std::string feature_csv_row(const FeatureVector& features);

}  // namespace stacksum

#endif  // STACKSUM_FEATURES_H_
