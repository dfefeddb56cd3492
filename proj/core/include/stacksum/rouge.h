#ifndef STACKSUM_ROUGE_H_
#define STACKSUM_ROUGE_H_

#include <cstddef>
#include <span>
#include <string>

namespace stacksum {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static RougeScore from(double precision, double recall);
};

struct RougeTriple {
  RougeScore r1;
  RougeScore r2;
  RougeScore rl;
  double mean_f = 0.0;
};

// Which value orders candidates against a reference.
enum class SortKey { kMeanF, kRouge1 };

double sort_value(const RougeTriple& triple, SortKey key);

// Clipped n-gram overlap ROUGE-N. Throws on an empty reference.
RougeScore rouge_n(std::span<const std::string> candidate,
                   std::span<const std::string> reference, std::size_t n);

// Length of the longest common subsequence (exact DP, O(|a|·|b|)).
std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

// Summary-level LCS ROUGE-L over the flat token sequences.
RougeScore rouge_l(std::span<const std::string> candidate,
                   std::span<const std::string> reference);

RougeTriple rouge_triple(std::span<const std::string> candidate,
                         std::span<const std::string> reference);

}  // namespace stacksum

#endif  // STACKSUM_ROUGE_H_
