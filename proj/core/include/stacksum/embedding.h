#ifndef STACKSUM_EMBEDDING_H_
#define STACKSUM_EMBEDDING_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace stacksum {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using Vector = Eigen::VectorXd;

// One row per token, all rows of the same dimension, finite entries only.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  explicit EmbeddingMatrix(Matrix values);

  std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(values_.cols()); }
  const Matrix& values() const { return values_; }

 private:
  Matrix values_;
};

enum class TextKind { kDocument, kCandidate };

// Rows returned by a provider. For documents a provider may also supply the
// global-slot row, in which case it is row 0.
struct ProvidedRows {
  EmbeddingMatrix rows;
  bool includes_global = false;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dim() const = 0;
  virtual ProvidedRows lookup(const std::string& key, std::span<const std::string> tokens,
                              TextKind kind) const = 0;
};

// Lookup keys used by stored embeddings.
std::string document_key(std::string_view doc_id);
std::string candidate_key(std::string_view doc_id, std::string_view system_tag);

// Deterministic type-level embeddings: every token maps to a unit vector
// drawn from a generator seeded by a hash of (seed, token).
class HashEmbeddingProvider final : public EmbeddingProvider {
 public:
  HashEmbeddingProvider(std::size_t dim, std::uint64_t seed);

  std::size_t dim() const override { return dim_; }
  std::uint64_t seed() const { return seed_; }
  RowVector token_vector(std::string_view token) const;
  ProvidedRows lookup(const std::string& key, std::span<const std::string> tokens,
                      TextKind kind) const override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// Precomputed matrices keyed by document_key / candidate_key.
struct EmbeddingStore {
  std::size_t dim = 0;
  std::map<std::string, Matrix> entries;
};

class StoredEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit StoredEmbeddingProvider(EmbeddingStore store);

  std::size_t dim() const override { return store_.dim; }
  // Documents accept either one row per token or one extra leading row that
  // is used as the global slot. Candidates need exactly one row per token.
  ProvidedRows lookup(const std::string& key, std::span<const std::string> tokens,
                      TextKind kind) const override;

 private:
  EmbeddingStore store_;
};

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

// SplitMix64 step; a portable, fully specified generator.
std::uint64_t splitmix64(std::uint64_t& state);

// Uniform double in [0, 1) with 53 bits of precision.
double uniform01(std::uint64_t& state);

// Standard normal via Box-Muller.
double standard_normal(std::uint64_t& state);

}  // namespace stacksum

#endif  // STACKSUM_EMBEDDING_H_
