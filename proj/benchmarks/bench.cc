#include <benchmark/benchmark.h>

#include <string>

#include "stacksum/candidates.h"
#include "stacksum/embedding.h"
#include "stacksum/rouge.h"
#include "stacksum/scorer.h"

namespace {

using namespace stacksum;

Tokens words(std::size_t n, std::uint64_t seed) {
  Tokens out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("w" + std::to_string(splitmix64(seed) % 500));
  return out;
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  return Matrix::NullaryExpr(rows, cols, [&] { return standard_normal(seed); });
}

void BM_RougeTriple(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto cand = words(n, 1), ref = words(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(rouge_triple(cand, ref));
}
BENCHMARK(BM_RougeTriple)->Arg(50)->Arg(200)->Arg(800);

void BM_Enumerate(benchmark::State& state) {
  std::vector<Tokens> sentences;
  for (std::uint64_t i = 0; i < 40; ++i) sentences.push_back(words(20, i));
  const auto doc = make_document("d", sentences);
  const auto reference = words(60, 99);
  EnumerationOptions opts;
  opts.top_n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    const auto ranking = heuristic_ranking(doc, &reference);
    benchmark::DoNotOptimize(enumerate_extractive(doc, ranking, opts));
  }
}
BENCHMARK(BM_Enumerate)->Arg(5)->Arg(8);

struct ScorerInputs {
  ScorerParams params;
  DocumentEmbedding doc;
  EmbeddingMatrix cand;
};

ScorerInputs scorer_inputs(std::size_t doc_tokens) {
  HeadConfig head;
  head.dim = 64;
  auto params = ScorerParams::initialize(head, 1);
  Matrix rows(static_cast<Eigen::Index>(doc_tokens) + 1, 64);
  rows.row(0) = params.global_slot;
  rows.bottomRows(static_cast<Eigen::Index>(doc_tokens)) = gaussian(static_cast<Eigen::Index>(doc_tokens), 64, 3);
  return {params, DocumentEmbedding{EmbeddingMatrix(rows), false}, EmbeddingMatrix(gaussian(60, 64, 4))};
}

void BM_ScoreForward(benchmark::State& state) {
  const auto in = scorer_inputs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    DocumentScorer scorer(in.params, in.doc);
    benchmark::DoNotOptimize(scorer.score(in.cand));
  }
}
BENCHMARK(BM_ScoreForward)->Arg(128)->Arg(512);

void BM_ScoreBackward(benchmark::State& state) {
  const auto in = scorer_inputs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(score_gradients(in.doc, in.cand, in.params, 1.0));
}
BENCHMARK(BM_ScoreBackward)->Arg(128)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
