#include "stacksum/embedding.h"

#include <cmath>
#include <numbers>

#include "stacksum/error.h"

namespace stacksum {

EmbeddingMatrix::EmbeddingMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.cols() == 0) throw Error("embedding dimension must be positive");
  if (!values_.allFinite()) throw Error("embedding contains NaN or Inf");
}

std::string document_key(std::string_view doc_id) { return std::string(doc_id); }

std::string candidate_key(std::string_view doc_id, std::string_view system_tag) {
  std::string key(doc_id);
  key.push_back('/');
  key += system_tag;
  return key;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double uniform01(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

double standard_normal(std::uint64_t& state) {
  double u1 = uniform01(state);
  while (u1 <= 0.0) u1 = uniform01(state);
  const double u2 = uniform01(state);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

HashEmbeddingProvider::HashEmbeddingProvider(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
  if (dim == 0) throw Error("embedding dimension must be positive");
}

RowVector HashEmbeddingProvider::token_vector(std::string_view token) const {
  std::uint64_t state = fnv1a(token) ^ (seed_ * 0x9e3779b97f4a7c15ULL);
  RowVector v(dim_);
  double norm = 0.0;
  do {
    for (std::size_t i = 0; i < dim_; ++i) v[i] = standard_normal(state);
    norm = v.norm();
  } while (norm == 0.0);
  return v / norm;
}

ProvidedRows HashEmbeddingProvider::lookup(const std::string&, std::span<const std::string> tokens,
                                           TextKind) const {
  Matrix m(tokens.size(), dim_);
  for (std::size_t i = 0; i < tokens.size(); ++i) m.row(i) = token_vector(tokens[i]);
  return {EmbeddingMatrix(std::move(m)), false};
}

StoredEmbeddingProvider::StoredEmbeddingProvider(EmbeddingStore store) : store_(std::move(store)) {
  for (const auto& [key, m] : store_.entries) {
    if (static_cast<std::size_t>(m.cols()) != store_.dim) {
      throw Error("embedding '" + key + "' has dimension " + std::to_string(m.cols()) +
                  ", expected " + std::to_string(store_.dim));
    }
  }
}

ProvidedRows StoredEmbeddingProvider::lookup(const std::string& key,
                                             std::span<const std::string> tokens,
                                             TextKind kind) const {
  const auto it = store_.entries.find(key);
  if (it == store_.entries.end()) throw Error("embedding not found: '" + key + "'");
  const auto rows = static_cast<std::size_t>(it->second.rows());
  if (rows == tokens.size()) return {EmbeddingMatrix(it->second), false};
  if (kind == TextKind::kDocument && rows == tokens.size() + 1) {
    return {EmbeddingMatrix(it->second), true};
  }
  throw Error("embedding '" + key + "' has " + std::to_string(rows) + " rows for " +
              std::to_string(tokens.size()) + " tokens");
}

}  // namespace stacksum
