#include "stacksum/rouge.h"

#include <algorithm>
#include <vector>

#include "stacksum/error.h"
#include "stacksum/text.h"

namespace stacksum {

RougeScore RougeScore::from(double precision, double recall) {
  RougeScore s;
  s.precision = precision;
  s.recall = recall;
  s.f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  return s;
}

double sort_value(const RougeTriple& triple, SortKey key) {
  return key == SortKey::kRouge1 ? triple.r1.f1 : triple.mean_f;
}

RougeScore rouge_n(std::span<const std::string> candidate,
                   std::span<const std::string> reference, std::size_t n) {
  if (reference.empty()) throw Error("empty reference");
  if (n == 0) throw Error("n-gram order must be positive");
  const auto ref_counts = ngram_counts(reference, n);
  const auto cand_counts = ngram_counts(candidate, n);
  const std::size_t ref_total = reference.size() >= n ? reference.size() - n + 1 : 0;
  const std::size_t cand_total = candidate.size() >= n ? candidate.size() - n + 1 : 0;

  std::size_t overlap = 0;
  // Both maps are ordered; merge-join them.
  auto r = ref_counts.begin();
  auto c = cand_counts.begin();
  while (r != ref_counts.end() && c != cand_counts.end()) {
    if (r->first == c->first) {
      overlap += std::min(r->second, c->second);
      ++r;
      ++c;
    } else if (r->first < c->first) {
      ++r;
    } else {
      ++c;
    }
  }
  const double recall = ref_total ? static_cast<double>(overlap) / ref_total : 0.0;
  const double precision = cand_total ? static_cast<double>(overlap) / cand_total : 0.0;
  return RougeScore::from(precision, recall);
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeScore rouge_l(std::span<const std::string> candidate,
                   std::span<const std::string> reference) {
  if (reference.empty()) throw Error("empty reference");
  if (candidate.empty()) return {};
  const double lcs = static_cast<double>(lcs_length(candidate, reference));
  return RougeScore::from(lcs / candidate.size(), lcs / reference.size());
}

RougeTriple rouge_triple(std::span<const std::string> candidate,
                         std::span<const std::string> reference) {
  RougeTriple t;
  t.r1 = rouge_n(candidate, reference, 1);
  t.r2 = rouge_n(candidate, reference, 2);
  t.rl = rouge_l(candidate, reference);
  t.mean_f = (t.r1.f1 + t.r2.f1 + t.rl.f1) / 3.0;
  return t;
}

}  // namespace stacksum
