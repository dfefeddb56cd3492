#include "stacksum/scorer.h"

#include <cmath>

#include "stacksum/error.h"

namespace stacksum {
namespace {

void check_dim(std::size_t got, std::size_t expected, const std::string& what) {
  if (got != expected) {
    throw Error("dimension mismatch for " + what + ": " + std::to_string(got) + " vs " +
                std::to_string(expected));
  }
}

// Row norms and unit rows; zero-norm rows stay zero.
void normalize_rows(const Matrix& m, Matrix& unit, Vector& norms) {
  unit.resize(m.rows(), m.cols());
  norms.resize(m.rows());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    norms[r] = m.row(r).norm();
    if (norms[r] > 0.0) {
      unit.row(r) = m.row(r) / norms[r];
    } else {
      unit.row(r).setZero();
    }
  }
}

// ∂cos(a, b)/∂a given unit rows and the norm of a.
RowVector cosine_grad(const RowVector& a_unit, const RowVector& b_unit, double a_norm,
                      double cosine) {
  if (a_norm == 0.0 || b_unit.squaredNorm() == 0.0) return RowVector::Zero(a_unit.size());
  return (b_unit - cosine * a_unit) / a_norm;
}

}  // namespace

DocumentEmbedding embed_document(const Document& doc, const EmbeddingProvider& provider,
                                 const ScorerParams& params) {
  return embed_document(document_key(doc.doc_id), doc.tokens, provider, params);
}

DocumentEmbedding embed_document(const std::string& key, const Tokens& tokens,
                                 const EmbeddingProvider& provider, const ScorerParams& params) {
  if (tokens.empty()) throw Error("empty document");
  auto provided = provider.lookup(key, tokens, TextKind::kDocument);
  check_dim(provided.rows.dim(), params.dim, "document '" + key + "'");
  if (provided.includes_global) return {std::move(provided.rows), true};
  Matrix m(provided.rows.rows() + 1, params.dim);
  m.row(0) = params.global_slot.row(0);
  m.bottomRows(provided.rows.rows()) = provided.rows.values();
  return {EmbeddingMatrix(std::move(m)), false};
}

EmbeddingMatrix embed_candidate(const std::string& key, const Tokens& tokens,
                                const EmbeddingProvider& provider, std::size_t expected_dim) {
  if (tokens.empty()) throw Error("empty candidate");
  auto provided = provider.lookup(key, tokens, TextKind::kCandidate);
  check_dim(provided.rows.dim(), expected_dim, "candidate '" + key + "'");
  return std::move(provided.rows);
}

ScoreBreakdown greedy_match(const Matrix& doc_tokens, const Matrix& candidate,
                            const Vector& weights, double shift) {
  if (candidate.rows() == 0) throw Error("empty candidate");
  if (doc_tokens.rows() == 0) throw Error("empty document");
  check_dim(static_cast<std::size_t>(candidate.cols()), static_cast<std::size_t>(doc_tokens.cols()),
            "candidate");
  if (weights.size() != doc_tokens.rows()) {
    throw Error("weight vector has " + std::to_string(weights.size()) + " entries for " +
                std::to_string(doc_tokens.rows()) + " document tokens");
  }
  Matrix du, cu;
  Vector dn, cn;
  normalize_rows(doc_tokens, du, dn);
  normalize_rows(candidate, cu, cn);
  const Matrix cosine = du * cu.transpose();

  ScoreBreakdown out;
  const auto k = cosine.rows();
  const auto l = cosine.cols();
  out.argmax_doc_to_cand.assign(static_cast<std::size_t>(k), 0);
  out.argmax_cand_to_doc.assign(static_cast<std::size_t>(l), 0);
  double weighted = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < l; ++j) {
      if (cosine(i, j) > cosine(i, best)) best = j;
    }
    out.argmax_doc_to_cand[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
    weighted += weights[i] * cosine(i, best);
  }
  double matched = 0.0;
  for (Eigen::Index j = 0; j < l; ++j) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < k; ++i) {
      if (cosine(i, j) > cosine(best, j)) best = i;
    }
    out.argmax_cand_to_doc[static_cast<std::size_t>(j)] = static_cast<std::size_t>(best);
    matched += cosine(best, j);
  }
  const double total_weight = weights.sum();
  if (total_weight == 0.0) throw Error("weights sum to zero");
  out.recall = weighted / total_weight + shift;
  out.precision = matched / static_cast<double>(l) + shift;
  const double denom = out.recall + out.precision;
  out.score = denom != 0.0 ? 2.0 * out.recall * out.precision / denom : 0.0;
  return out;
}

ScoreBreakdown score(const Matrix& doc_tokens, const Matrix& candidate,
                     const WeightVector& weights) {
  return greedy_match(doc_tokens, candidate, weights.weights, 1.0);
}

WeightVector token_weights(const DocumentEmbedding& doc, const ScorerParams& params) {
  return DocumentScorer(params, doc).weights();
}

DocumentScorer::DocumentScorer(const ScorerParams& params, const DocumentEmbedding& doc)
    : params_(params), doc_(doc) {
  check_dim(doc.matrix.dim(), params.dim, "document");
  if (doc.matrix.rows() < 2) throw Error("document embedding needs a global slot and a token");
  input_ = project(doc.matrix.values());
  const auto k = input_.rows() - 1;
  tokens_ = input_.bottomRows(k);
  head_ = head_forward(params, input_);

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(params.dim));
  Vector logits = tokens_ * head_.output.row(0).transpose() * inv_sqrt_d;
  const double mx = logits.maxCoeff();
  weights_.weights = (logits.array() - mx).exp();
  weights_.weights /= weights_.weights.sum();

  d_weights_ = Vector::Zero(k);
  d_tokens_ = Matrix::Zero(k, input_.cols());
}

Matrix DocumentScorer::project(const Matrix& raw) const {
  if (params_.projection) return raw * *params_.projection;
  return raw;
}

ScoreBreakdown DocumentScorer::score(const EmbeddingMatrix& candidate) const {
  check_dim(candidate.dim(), params_.dim, "candidate");
  return greedy_match(tokens_, project(candidate.values()), weights_.weights, 1.0);
}

Matrix DocumentScorer::backward_candidate(const EmbeddingMatrix& candidate,
                                          const ScoreBreakdown& breakdown, double upstream,
                                          ScorerParams& grads) {
  const Matrix cand = project(candidate.values());
  Matrix d_cand = Matrix::Zero(cand.rows(), cand.cols());
  const double r = breakdown.recall;
  const double p = breakdown.precision;
  const double denom = r + p;
  if (upstream != 0.0 && denom != 0.0) {
    const double g_recall = upstream * 2.0 * p * p / (denom * denom);
    const double g_precision = upstream * 2.0 * r * r / (denom * denom);

    Matrix du, cu;
    Vector dn, cn;
    normalize_rows(tokens_, du, dn);
    normalize_rows(cand, cu, cn);

    const Vector& w = weights_.weights;
    const double total = w.sum();
    const double base_recall = r - 1.0;
    for (Eigen::Index i = 0; i < tokens_.rows(); ++i) {
      const auto j = static_cast<Eigen::Index>(breakdown.argmax_doc_to_cand[static_cast<std::size_t>(i)]);
      const double c = du.row(i).dot(cu.row(j));
      d_weights_[i] += g_recall * (c - base_recall) / total;
      const double g = g_recall * w[i] / total;
      d_tokens_.row(i) += g * cosine_grad(du.row(i), cu.row(j), dn[i], c);
      d_cand.row(j) += g * cosine_grad(cu.row(j), du.row(i), cn[j], c);
    }
    const double g_match = g_precision / static_cast<double>(cand.rows());
    for (Eigen::Index j = 0; j < cand.rows(); ++j) {
      const auto i = static_cast<Eigen::Index>(breakdown.argmax_cand_to_doc[static_cast<std::size_t>(j)]);
      const double c = du.row(i).dot(cu.row(j));
      d_tokens_.row(i) += g_match * cosine_grad(du.row(i), cu.row(j), dn[i], c);
      d_cand.row(j) += g_match * cosine_grad(cu.row(j), du.row(i), cn[j], c);
    }
  }
  if (params_.projection) {
    *grads.projection += candidate.values().transpose() * d_cand;
    return d_cand * params_.projection->transpose();
  }
  return d_cand;
}

Matrix DocumentScorer::backward_document(ScorerParams& grads) {
  const auto k = tokens_.rows();
  const Vector& w = weights_.weights;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(params_.dim));
  const Vector d_logits = w.array() * (d_weights_.array() - w.dot(d_weights_));

  Matrix d_input = Matrix::Zero(input_.rows(), input_.cols());
  const RowVector global = head_.output.row(0);
  d_input.bottomRows(k) = d_tokens_ + d_logits * global * inv_sqrt_d;
  if (!d_logits.isZero(0.0)) {
    Matrix d_output = Matrix::Zero(input_.rows(), input_.cols());
    d_output.row(0) = d_logits.transpose() * tokens_ * inv_sqrt_d;
    d_input += head_backward(params_, head_, d_output, grads);
  }

  Matrix d_raw;
  if (params_.projection) {
    *grads.projection += doc_.matrix.values().transpose() * d_input;
    d_raw = d_input * params_.projection->transpose();
  } else {
    d_raw = std::move(d_input);
  }
  if (!doc_.global_from_provider) grads.global_slot.row(0) += d_raw.row(0);

  d_weights_.setZero();
  d_tokens_.setZero();
  return d_raw;
}

void check_finite(const ScorerParams& grads) {
  for (const auto& [name, m] : grads.tensors()) {
    if (!m->allFinite()) throw Error("non-finite gradient for parameter " + name);
  }
}

ScoreGradients score_gradients(const DocumentEmbedding& doc, const EmbeddingMatrix& candidate,
                               const ScorerParams& params, double upstream) {
  DocumentScorer scorer(params, doc);
  const auto breakdown = scorer.score(candidate);
  ScoreGradients out{params.zeros_like(), {}, {}};
  out.candidate_input = scorer.backward_candidate(candidate, breakdown, upstream, out.params);
  out.document_input = scorer.backward_document(out.params);
  check_finite(out.params);
  return out;
}

std::size_t argmax(const std::vector<double>& values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

Selection select(const Document& doc, const CandidateSet& set, const ScorerParams& params,
                 const EmbeddingProvider& provider) {
  if (set.candidates.empty()) throw Error("empty candidate set");
  const auto doc_emb = embed_document(doc, provider, params);
  DocumentScorer scorer(params, doc_emb);
  Selection out;
  std::vector<double> values;
  for (const auto& c : set.candidates) {
    const auto emb = embed_candidate(candidate_key(set.doc_id, c.system_tag), c.tokens, provider,
                                     params.dim);
    out.scores.push_back(scorer.score(emb));
    values.push_back(out.scores.back().score);
  }
  out.chosen = argmax(values);
  return out;
}

}  // namespace stacksum
