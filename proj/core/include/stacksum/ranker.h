#ifndef STACKSUM_RANKER_H_
#define STACKSUM_RANKER_H_

#include <cstddef>
#include <span>
#include <vector>

#include "stacksum/embedding.h"
#include "stacksum/features.h"

namespace stacksum {

// Candidates of one document with their reference quality (higher is
// better). Every pair with strictly different quality is a training pair.
struct RankingList {
  std::vector<FeatureVector> features;
  std::vector<double> quality;
};

struct LinearRanker {
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> mean;    // standardization, frozen at fit time
  std::vector<double> stddev;  // 1 for constant features
  double c = 0.0;
  std::vector<double> objective_history;

  double score(const FeatureVector& x) const;
};

struct RankerOptions {
  std::vector<double> c_grid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  std::size_t folds = 5;
  std::size_t iterations = 300;
  double initial_step = 1.0;
};

// Pairwise hinge objective (mean over pairs of max(0, 1 - w·(x_better -
// x_worse))) + c·|w|², minimized by subgradient descent with backtracking so
// the objective never increases. Lists without a strict quality difference
// are skipped; throws when nothing is left.
LinearRanker fit_ranker(const std::vector<RankingList>& lists, double c,
                        const RankerOptions& options = {});

// Picks c from options.c_grid by k-fold cross-validation (mean quality of
// the chosen candidate on held-out lists), then refits on all lists.
LinearRanker fit_ranker_cv(const std::vector<RankingList>& lists, const RankerOptions& options = {});

// argmax of w·x + bias; ties go to the lowest index.
std::size_t rank_with(const LinearRanker& ranker, std::span<const FeatureVector> candidates);

// Greedy-matching F (uniform weights, no learned head, no +1 shift) between
// raw document token rows and each candidate; argmax with lowest-index ties.
std::size_t unsupervised_select(const Matrix& doc_tokens, const std::vector<Matrix>& candidates,
                                std::vector<double>* scores = nullptr);

}  // namespace stacksum

#endif  // STACKSUM_RANKER_H_
