#include "stacksum/ranker.h"

#include <cmath>
#include <limits>

#include "stacksum/error.h"
#include "stacksum/scorer.h"

namespace stacksum {
namespace {

using Weights = std::vector<double>;

struct PairData {
  std::vector<std::array<double, kFeatureCount>> deltas;  // standardized x_better - x_worse
};

bool usable(const RankingList& list) {
  if (list.features.size() != list.quality.size()) {
    throw Error("ranking list has mismatched feature and quality counts");
  }
  for (std::size_t i = 1; i < list.quality.size(); ++i) {
    if (list.quality[i] != list.quality[0]) return true;
  }
  return false;
}

double objective(const PairData& data, const Weights& w, double c) {
  double hinge = 0.0;
  for (const auto& d : data.deltas) {
    double margin = 0.0;
    for (std::size_t f = 0; f < kFeatureCount; ++f) margin += w[f] * d[f];
    hinge += std::max(0.0, 1.0 - margin);
  }
  double reg = 0.0;
  for (double v : w) reg += v * v;
  return hinge / static_cast<double>(data.deltas.size()) + c * reg;
}

Weights subgradient(const PairData& data, const Weights& w, double c) {
  Weights g(kFeatureCount, 0.0);
  const double inv = 1.0 / static_cast<double>(data.deltas.size());
  for (const auto& d : data.deltas) {
    double margin = 0.0;
    for (std::size_t f = 0; f < kFeatureCount; ++f) margin += w[f] * d[f];
    if (1.0 - margin > 0.0) {
      for (std::size_t f = 0; f < kFeatureCount; ++f) g[f] -= inv * d[f];
    }
  }
  for (std::size_t f = 0; f < kFeatureCount; ++f) g[f] += 2.0 * c * w[f];
  return g;
}

LinearRanker fit_usable(const std::vector<const RankingList*>& lists, double c,
                        const RankerOptions& options) {
  LinearRanker r;
  r.c = c;
  r.mean.assign(kFeatureCount, 0.0);
  r.stddev.assign(kFeatureCount, 1.0);
  std::size_t n = 0;
  for (const auto* list : lists) {
    for (const auto& x : list->features) {
      for (std::size_t f = 0; f < kFeatureCount; ++f) r.mean[f] += x[f];
      ++n;
    }
  }
  for (auto& m : r.mean) m /= static_cast<double>(n);
  std::vector<double> var(kFeatureCount, 0.0);
  for (const auto* list : lists) {
    for (const auto& x : list->features) {
      for (std::size_t f = 0; f < kFeatureCount; ++f) var[f] += (x[f] - r.mean[f]) * (x[f] - r.mean[f]);
    }
  }
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    const double s = std::sqrt(var[f] / static_cast<double>(n));
    r.stddev[f] = s > 1e-12 ? s : 1.0;
  }

  PairData data;
  for (const auto* list : lists) {
    for (std::size_t a = 0; a < list->features.size(); ++a) {
      for (std::size_t b = 0; b < list->features.size(); ++b) {
        if (!(list->quality[a] > list->quality[b])) continue;
        std::array<double, kFeatureCount> d{};
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
          const double xa = (list->features[a][f] - r.mean[f]) / r.stddev[f];
          const double xb = (list->features[b][f] - r.mean[f]) / r.stddev[f];
          d[f] = xa - xb;
        }
        data.deltas.push_back(d);
      }
    }
  }

  Weights w(kFeatureCount, 0.0);
  double current = objective(data, w, c);
  r.objective_history.push_back(current);
  double step = options.initial_step;
  for (std::size_t it = 0; it < options.iterations; ++it) {
    const auto g = subgradient(data, w, c);
    double gnorm = 0.0;
    for (double v : g) gnorm += v * v;
    if (gnorm == 0.0) break;
    bool accepted = false;
    for (int halvings = 0; halvings < 40; ++halvings) {
      Weights trial = w;
      for (std::size_t f = 0; f < kFeatureCount; ++f) trial[f] -= step * g[f];
      const double value = objective(data, trial, c);
      if (value <= current) {
        w = std::move(trial);
        current = value;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    r.objective_history.push_back(current);
    if (!accepted) break;
    step = std::min(step * 2.0, options.initial_step);
  }
  r.weights = std::move(w);
  return r;
}

std::vector<const RankingList*> usable_lists(const std::vector<RankingList>& lists) {
  std::vector<const RankingList*> out;
  for (const auto& l : lists) {
    if (usable(l)) out.push_back(&l);
  }
  if (out.empty()) throw Error("no ranking list has candidates of different quality");
  return out;
}

}  // namespace

double LinearRanker::score(const FeatureVector& x) const {
  if (weights.size() != kFeatureCount || mean.size() != kFeatureCount ||
      stddev.size() != kFeatureCount) {
    throw Error("ranker has " + std::to_string(weights.size()) + " weights, expected " +
                std::to_string(kFeatureCount));
  }
  double s = bias;
  for (std::size_t f = 0; f < kFeatureCount; ++f) s += weights[f] * (x[f] - mean[f]) / stddev[f];
  return s;
}

LinearRanker fit_ranker(const std::vector<RankingList>& lists, double c,
                        const RankerOptions& options) {
  if (c < 0.0) throw Error("regularization must be nonnegative");
  return fit_usable(usable_lists(lists), c, options);
}

LinearRanker fit_ranker_cv(const std::vector<RankingList>& lists, const RankerOptions& options) {
  if (options.c_grid.empty()) throw Error("empty regularization grid");
  const auto usable = usable_lists(lists);
  const std::size_t folds = std::min(options.folds, usable.size());
  if (folds < 2) return fit_usable(usable, options.c_grid.front(), options);

  double best_c = options.c_grid.front();
  double best_value = -std::numeric_limits<double>::infinity();
  for (double c : options.c_grid) {
    double total = 0.0;
    for (std::size_t fold = 0; fold < folds; ++fold) {
      std::vector<const RankingList*> train;
      std::vector<const RankingList*> held;
      for (std::size_t i = 0; i < usable.size(); ++i) {
        (i % folds == fold ? held : train).push_back(usable[i]);
      }
      const auto ranker = fit_usable(train, c, options);
      for (const auto* list : held) total += list->quality[rank_with(ranker, list->features)];
    }
    const double value = total / static_cast<double>(usable.size());
    if (value > best_value) {
      best_value = value;
      best_c = c;
    }
  }
  return fit_usable(usable, best_c, options);
}

std::size_t rank_with(const LinearRanker& ranker, std::span<const FeatureVector> candidates) {
  if (candidates.empty()) throw Error("empty candidate set");
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const auto& x : candidates) scores.push_back(ranker.score(x));
  return argmax(scores);
}

std::size_t unsupervised_select(const Matrix& doc_tokens, const std::vector<Matrix>& candidates,
                                std::vector<double>* scores) {
  if (candidates.empty()) throw Error("empty candidate set");
  const Vector uniform = Vector::Ones(doc_tokens.rows());
  std::vector<double> values;
  for (const auto& c : candidates) values.push_back(greedy_match(doc_tokens, c, uniform, 0.0).score);
  const auto chosen = argmax(values);
  if (scores) *scores = std::move(values);
  return chosen;
}

}  // namespace stacksum
