#include "stacksum/features.h"

#include <algorithm>
#include <cstdio>
#include <set>

#include "stacksum/error.h"
#include "stacksum/rouge.h"

namespace stacksum {
namespace {

double novelty(const Tokens& candidate, const Tokens& document, std::size_t k) {
  const auto cand = ngram_counts(candidate, k);
  if (cand.empty()) return 0.0;
  const auto doc = ngram_counts(document, k);
  std::size_t total = 0;
  std::size_t novel = 0;
  for (const auto& [gram, count] : cand) {
    total += count;
    if (!doc.count(gram)) novel += count;
  }
  return static_cast<double>(novel) / static_cast<double>(total);
}

double repetition(const Tokens& candidate, std::size_t k) {
  if (candidate.size() < k) return 0.0;
  const auto counts = ngram_counts(candidate, k);
  const double total = static_cast<double>(candidate.size() - k + 1);
  return 1.0 - static_cast<double>(counts.size()) / total;
}

}  // namespace

std::vector<Fragment> extractive_fragments(std::span<const std::string> candidate,
                                           std::span<const std::string> document) {
  std::vector<Fragment> out;
  std::size_t i = 0;
  while (i < candidate.size()) {
    Fragment best{i, 0, 0};
    // Every document start is tried; skipping past a partial match can miss
    // a longer one that begins inside it.
    for (std::size_t j = 0; j < document.size(); ++j) {
      if (candidate[i] != document[j]) continue;
      std::size_t len = 0;
      while (i + len < candidate.size() && j + len < document.size() &&
             candidate[i + len] == document[j + len]) {
        ++len;
      }
      if (len > best.length) best = {i, j, len};
    }
    if (best.length > 0) {
      out.push_back(best);
      i += best.length;
    } else {
      ++i;
    }
  }
  return out;
}

FeatureVector extract_features(const Document& doc, const Candidate& candidate) {
  if (candidate.tokens.empty()) throw Error("empty candidate");
  if (doc.tokens.empty()) throw Error("empty document");
  FeatureVector f;
  const auto& cand = candidate.tokens;
  const double cand_len = static_cast<double>(cand.size());
  f[kDocLen] = static_cast<double>(doc.tokens.size());
  f[kCandLen] = cand_len;
  f[kRouge1Dc] = rouge_n(cand, doc.tokens, 1).f1;
  f[kRouge2Dc] = rouge_n(cand, doc.tokens, 2).f1;
  f[kRougeLDc] = rouge_l(cand, doc.tokens).f1;

  double covered = 0.0;
  double squared = 0.0;
  std::size_t longest = 0;
  for (const auto& frag : extractive_fragments(cand, doc.tokens)) {
    covered += static_cast<double>(frag.length);
    squared += static_cast<double>(frag.length * frag.length);
    longest = std::max(longest, frag.length);
  }
  f[kCopyLen] = static_cast<double>(longest);
  f[kCoverage] = covered / cand_len;
  f[kDensity] = squared / cand_len;
  f[kCompression] = f[kDocLen] / cand_len;
  for (std::size_t k = 1; k <= 4; ++k) {
    f[kNovelty1 + k - 1] = novelty(cand, doc.tokens, k);
    f[kRepetition1 + k - 1] = repetition(cand, k);
  }

  // Sentence of every document token.
  std::vector<std::size_t> sentence_of;
  sentence_of.reserve(doc.tokens.size());
  for (const auto& s : doc.sentences) sentence_of.insert(sentence_of.end(), s.tokens.size(), s.index);
  const auto& cand_sentences =
      candidate.sentences.empty() ? std::vector<Tokens>{cand} : candidate.sentences;
  std::size_t fused = 0;
  for (const auto& sentence : cand_sentences) {
    std::set<std::size_t> sources;
    for (const auto& frag : extractive_fragments(sentence, doc.tokens)) {
      for (std::size_t t = 0; t < frag.length; ++t) sources.insert(sentence_of[frag.document_start + t]);
    }
    if (sources.size() >= 2) ++fused;
  }
  f[kFusionRatio] = static_cast<double>(fused) / static_cast<double>(cand_sentences.size());
  return f;
}

std::string feature_csv_header() {
  std::string s;
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (i) s.push_back(',');
    s += kFeatureNames[i];
  }
  return s;
}

std::string feature_csv_row(const FeatureVector& features) {
  std::string s;
  char buf[32];
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (i) s.push_back(',');
    std::snprintf(buf, sizeof buf, "%.17g", features[i]);
    s += buf;
  }
  return s;
}

}  // namespace stacksum
