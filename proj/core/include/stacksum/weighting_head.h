#ifndef STACKSUM_WEIGHTING_HEAD_H_
#define STACKSUM_WEIGHTING_HEAD_H_

#include <vector>

#include "stacksum/params.h"

namespace stacksum {

// Activations kept from a forward pass of the weighting head so that the
// backward pass can run without recomputation.
struct BlockCache {
  Matrix input;
  Matrix ln1_xhat, ln1_out;
  RowVector ln1_rstd;
  Matrix q, k, v;
  std::vector<Matrix> attention;  // one n×n row-stochastic matrix per head
  Matrix context;                 // concatenated per-head outputs
  Matrix mid;                     // input + attention output
  Matrix ln2_xhat, ln2_out;
  RowVector ln2_rstd;
  Matrix ff_pre, ff_act;
};

struct HeadCache {
  std::vector<BlockCache> blocks;
  Matrix output;
};

// Stacked pre-norm self-attention blocks (no causal mask, no final norm):
//   h = x + MHA(LN1(x));  out = h + FFN(LN2(h)),  FFN = GELU(h·W1+b1)·W2+b2.
HeadCache head_forward(const ScorerParams& params, const Matrix& x);

// Accumulates parameter gradients into `grads` and returns ∂L/∂x for the
// given ∂L/∂output.
Matrix head_backward(const ScorerParams& params, const HeadCache& cache, const Matrix& d_output,
                     ScorerParams& grads);

double gelu(double x);
double gelu_derivative(double x);

}  // namespace stacksum

#endif  // STACKSUM_WEIGHTING_HEAD_H_
