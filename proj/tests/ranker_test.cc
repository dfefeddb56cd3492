#include "stacksum/ranker.h"

#include <gtest/gtest.h>

#include <cmath>

#include "stacksum/error.h"

namespace stacksum {
namespace {

// Lists where feature `signal` rises with quality and the rest is noise.
std::vector<RankingList> separable(std::size_t lists, std::size_t per_list, double sign,
                                   std::uint64_t seed) {
  std::uint64_t state = seed;
  std::vector<RankingList> out;
  for (std::size_t l = 0; l < lists; ++l) {
    RankingList list;
    for (std::size_t c = 0; c < per_list; ++c) {
      FeatureVector f;
      for (std::size_t i = 0; i < kFeatureCount; ++i) f[i] = standard_normal(state);
      const double q = uniform01(state);
      f[kCoverage] = sign * (3.0 * q);
      list.features.push_back(f);
      list.quality.push_back(q);
    }
    out.push_back(std::move(list));
  }
  return out;
}

std::size_t best_index(const RankingList& list) {
  return static_cast<std::size_t>(std::max_element(list.quality.begin(), list.quality.end()) -
                                  list.quality.begin());
}

TEST(Ranker, RecoversPerfectlyCorrelatedFeature) {
  const auto train = separable(30, 6, 1.0, 1);
  const auto held = separable(20, 6, 1.0, 2);
  const auto ranker = fit_ranker_cv(train);
  // Near-tied qualities can be swapped by noise; chance level is 1/6.
  double hits = 0;
  for (const auto& list : held) hits += rank_with(ranker, list.features) == best_index(list);
  EXPECT_GE(hits / static_cast<double>(held.size()), 0.8);
  EXPECT_GT(ranker.weights[kCoverage], 0.0);
  for (std::size_t i = 1; i < ranker.objective_history.size(); ++i) {
    EXPECT_LE(ranker.objective_history[i], ranker.objective_history[i - 1] + 1e-12);
  }
}

TEST(Ranker, FlippedFeatureFlipsWeight) {
  const auto pos = fit_ranker(separable(20, 5, 1.0, 3), 0.01);
  const auto neg = fit_ranker(separable(20, 5, -1.0, 3), 0.01);
  EXPECT_GT(pos.weights[kCoverage], 0.0);
  EXPECT_LT(neg.weights[kCoverage], 0.0);
}

TEST(Ranker, ConstantFeaturesGiveZeroWeights) {
  std::vector<RankingList> lists(5);
  for (auto& list : lists) {
    for (int c = 0; c < 4; ++c) {
      FeatureVector f;
      f.values.fill(2.0);
      list.features.push_back(f);
      list.quality.push_back(c);
    }
  }
  const auto ranker = fit_ranker(lists, 0.1);
  for (double w : ranker.weights) EXPECT_NEAR(w, 0.0, 1e-12);
  EXPECT_EQ(rank_with(ranker, lists[0].features), 0u);
}

TEST(Ranker, ErrorsWithoutPairs) {
  std::vector<RankingList> flat(1);
  flat[0].features.resize(3);
  flat[0].quality = {1, 1, 1};
  EXPECT_THROW(fit_ranker(flat, 0.1), Error);
  EXPECT_THROW(rank_with(LinearRanker{}, std::vector<FeatureVector>{}), Error);
}

Matrix rows(std::initializer_list<std::initializer_list<double>> list) {
  Matrix m(static_cast<Eigen::Index>(list.size()), static_cast<Eigen::Index>(list.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : list) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

TEST(UnsupervisedSelect, PrefersMatchingCandidate) {
  const Matrix doc = rows({{1, 0, 0}, {0, 1, 0}});
  std::vector<double> scores;
  EXPECT_EQ(unsupervised_select(doc, {rows({{0, 0, 1}}), doc}, &scores), 1u);
  EXPECT_NEAR(scores[1], 1.0, 1e-12);
  EXPECT_NEAR(scores[0], 0.0, 1e-12);
  EXPECT_EQ(unsupervised_select(doc, {doc, doc, doc}), 0u);
  EXPECT_EQ(unsupervised_select(doc, {rows({{0, 0, 1}})}), 0u);

  // Uniform weights, no shift: d1=(1,0), d2=(0,1), c1=(1,0) → R = 0.5,
  // P = 1, F = 2/3; c2 = (1,1) → R = P = √½.
  const Matrix d2 = rows({{1, 0}, {0, 1}});
  EXPECT_EQ(unsupervised_select(d2, {rows({{1, 0}}), rows({{1, 1}})}, &scores), 1u);
  EXPECT_NEAR(scores[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(scores[1], std::sqrt(0.5), 1e-12);
}

}  // namespace
}  // namespace stacksum
