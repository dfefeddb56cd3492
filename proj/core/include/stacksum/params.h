#ifndef STACKSUM_PARAMS_H_
#define STACKSUM_PARAMS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stacksum/embedding.h"

namespace stacksum {

struct HeadConfig {
  std::size_t dim = 64;
  std::size_t num_heads = 4;
  std::size_t num_layers = 2;
  std::size_t ff_multiplier = 4;
  bool use_projection = true;
};

// One pre-norm transformer block. Linear maps act on row vectors:
// y = x·W + b. Bias and norm vectors are stored as 1×n matrices.
struct BlockParams {
  Matrix ln1_gamma, ln1_beta;
  Matrix wq, bq, wk, bk, wv, bv, wo, bo;
  Matrix ln2_gamma, ln2_beta;
  Matrix w1, b1, w2, b2;
};

// Trainable state of the scorer: the token-weighting head, the learned
// global-slot vector prepended to documents, and an optional square
// projection applied to every raw embedding row.
struct ScorerParams {
  static constexpr int kFormatVersion = 1;

  std::size_t dim = 0;
  std::size_t num_heads = 0;
  std::size_t ff_dim = 0;
  std::vector<BlockParams> blocks;
  Matrix global_slot;                // 1×dim, raw embedding space
  std::optional<Matrix> projection;  // dim×dim
  int version = kFormatVersion;

  // Xavier-normal linear maps, unit/zero norms, identity projection.
  static ScorerParams initialize(const HeadConfig& config, std::uint64_t seed);

  ScorerParams zeros_like() const;
  HeadConfig config() const;

  using NamedTensor = std::pair<std::string, Matrix*>;
  using ConstNamedTensor = std::pair<std::string, const Matrix*>;
  std::vector<NamedTensor> tensors();
  std::vector<ConstNamedTensor> tensors() const;

  std::size_t parameter_count() const;
  // Throws when shapes disagree with dim/ff_dim or a value is not finite.
  void validate() const;
};

bool operator==(const ScorerParams& a, const ScorerParams& b);

}  // namespace stacksum

#endif  // STACKSUM_PARAMS_H_
