#ifndef STACKSUM_SCORER_H_
#define STACKSUM_SCORER_H_

#include <cstddef>
#include <string>
#include <vector>

#include "stacksum/candidates.h"
#include "stacksum/embedding.h"
#include "stacksum/params.h"
#include "stacksum/text.h"
#include "stacksum/weighting_head.h"

namespace stacksum {

// Raw document rows with the global slot at row 0 and one row per token
// after it. `global_from_provider` is set when the provider supplied row 0;
// otherwise it is a copy of ScorerParams::global_slot.
struct DocumentEmbedding {
  EmbeddingMatrix matrix;
  bool global_from_provider = false;

  std::size_t tokens() const { return matrix.rows() - 1; }
};

DocumentEmbedding embed_document(const Document& doc, const EmbeddingProvider& provider,
                                 const ScorerParams& params);
// Documents given only as tokens; `key` is the storage key.
DocumentEmbedding embed_document(const std::string& key, const Tokens& tokens,
                                 const EmbeddingProvider& provider, const ScorerParams& params);
EmbeddingMatrix embed_candidate(const std::string& key, const Tokens& tokens,
                                const EmbeddingProvider& provider, std::size_t expected_dim);

// Softmax weights over document tokens (the global slot is not part of the
// support). Each weight is positive and they sum to one.
struct WeightVector {
  Vector weights;

  std::size_t size() const { return static_cast<std::size_t>(weights.size()); }
};

struct ScoreBreakdown {
  double recall = 0.0;
  double precision = 0.0;
  double score = 0.0;
  std::vector<std::size_t> argmax_doc_to_cand;  // per document token
  std::vector<std::size_t> argmax_cand_to_doc;  // per candidate token
};

// Greedy-matching similarity between token rows:
//   R = Σ w_i max_j cos(d_i, c_j) / Σ w_i + shift
//   P = Σ_j max_i cos(d_i, c_j) / l + shift
//   score = 2RP / (R + P)   (0 when R + P = 0)
// Ties in max go to the smallest index; zero-norm rows have cosine 0.
ScoreBreakdown greedy_match(const Matrix& doc_tokens, const Matrix& candidate,
                            const Vector& weights, double shift);

// Score with the stabilizing +1 shift on recall and precision.
ScoreBreakdown score(const Matrix& doc_tokens, const Matrix& candidate,
                     const WeightVector& weights);

// Softmax token weights of the document after projection and the head:
//   w_i ∝ exp(dot(d_i, ĥ_0) / √d), ĥ = Transformer(D), d_i the projected
//   input row of token i.
WeightVector token_weights(const DocumentEmbedding& doc, const ScorerParams& params);

// Cached forward state of one document under fixed parameters. Scores any
// number of candidates and accumulates gradients for them; document-side
// terms are buffered and pushed through the head by backward_document().
class DocumentScorer {
 public:
  DocumentScorer(const ScorerParams& params, const DocumentEmbedding& doc);

  const WeightVector& weights() const { return weights_; }
  const Matrix& projected_tokens() const { return tokens_; }
  Matrix project(const Matrix& raw) const;

  ScoreBreakdown score(const EmbeddingMatrix& candidate) const;

  // Adds upstream·∂score/∂θ for parameters reached through the candidate
  // rows into `grads` and returns upstream·∂score/∂(candidate input rows).
  Matrix backward_candidate(const EmbeddingMatrix& candidate, const ScoreBreakdown& breakdown,
                            double upstream, ScorerParams& grads);

  // Pushes the buffered document-side gradient through the softmax, the
  // weighting head and the projection. Returns ∂/∂(document input rows),
  // global slot included. Resets the buffers.
  Matrix backward_document(ScorerParams& grads);

 private:
  const ScorerParams& params_;
  const DocumentEmbedding& doc_;
  Matrix input_;   // projected rows, global slot first
  Matrix tokens_;  // projected token rows
  HeadCache head_;
  WeightVector weights_;
  Vector d_weights_;
  Matrix d_tokens_;
};

struct ScoreGradients {
  ScorerParams params;
  Matrix document_input;   // (k+1)×d
  Matrix candidate_input;  // l×d
};

// Gradient of upstream·score(D, C) with respect to every trainable tensor
// and both inputs. Max is differentiated through the recorded argmax.
// Throws naming the tensor if any gradient is NaN.
ScoreGradients score_gradients(const DocumentEmbedding& doc, const EmbeddingMatrix& candidate,
                               const ScorerParams& params, double upstream);

// Throws naming the first non-finite gradient tensor.
void check_finite(const ScorerParams& grads);

struct Selection {
  std::size_t chosen = 0;
  std::vector<ScoreBreakdown> scores;
};

// argmax over candidates of the score; ties go to the lowest index.
Selection select(const Document& doc, const CandidateSet& set, const ScorerParams& params,
                 const EmbeddingProvider& provider);

// Index of the first maximum.
std::size_t argmax(const std::vector<double>& values);

}  // namespace stacksum

#endif  // STACKSUM_SCORER_H_
