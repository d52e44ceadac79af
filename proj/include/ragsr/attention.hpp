#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ragsr/bitmat.hpp"
#include "ragsr/mask.hpp"
#include "ragsr/matrix.hpp"

namespace ragsr {

struct HeadInputs {
  Matrix q;  // n_query x head_dim
  Matrix k;  // n_key x head_dim
  Matrix v;  // n_key x value_dim
};

struct AttentionBatch {
  std::vector<HeadInputs> heads;
  double scale = 1.0;

  // scale = 1 / sqrt(head_dim)
  static AttentionBatch with_default_scale(std::vector<HeadInputs> heads);
  std::size_t queries() const { return heads.empty() ? 0 : heads.front().q.rows(); }
  std::size_t keys() const { return heads.empty() ? 0 : heads.front().k.rows(); }
};

struct AttentionResult {
  std::vector<Matrix> outputs;  // per head, n_query x value_dim
  std::vector<Matrix> weights;  // per head, n_query x n_key; exactly 0 where masked
};

struct AttentionGrads {
  std::vector<Matrix> dq;
  std::vector<Matrix> dk;
  std::vector<Matrix> dv;
};

// Scaled dot-product attention restricted to mask-allowed (query, key) pairs.
// Masked pairs are excluded from the row max and the exponential sum, so
// their weight is exactly zero. Every mask row must allow at least one key.
AttentionResult masked_attention_forward(const AttentionBatch& batch, const BitMatrix& mask);

// Same computation with every pair allowed.
AttentionResult attention_forward(const AttentionBatch& batch);

// Gradients of sum_h <upstream_h, outputs_h> with respect to Q, K and V,
// using the weights saved by the forward pass.
AttentionGrads masked_attention_backward(const AttentionBatch& batch, const AttentionResult& saved,
                                         std::span<const Matrix> upstream);

// Projection weights of one attention block. Rows are multiplied from the
// left: Q = X * wq. The output projection wo plays the role of the
// post-attention transform, followed by the residual add when enabled.
struct BlockWeights {
  std::size_t model_dim = 0;
  std::size_t heads = 1;
  Matrix wq, wk, wv, wo;
  bool residual = true;

  std::size_t head_dim() const { return model_dim / heads; }
};

void validate(const BlockWeights& w);

// Entries drawn from N(0, gain^2 / model_dim) with the portable generator.
BlockWeights init_block_weights(std::size_t model_dim, std::size_t heads, std::uint64_t seed, double gain = 1.0,
                                bool residual = true);
BlockWeights identity_block_weights(std::size_t model_dim, std::size_t heads, bool residual);
BlockWeights zero_block_weights(std::size_t model_dim, std::size_t heads, bool residual);

// Joint sequence for the regional stage: text rows first, then image rows.
struct RegionalBlockInput {
  Matrix image_hidden;  // I x model_dim, output of the global stage
  Matrix text_hidden;   // T x model_dim, regional caption embeddings
  BitMatrix mask;       // (T + I) x (T + I) joint mask
};

RegionalBlockInput make_regional_input(Matrix image_hidden, Matrix text_hidden, const RegionalMask& mask);

// Masked self-attention over [text; image], output projection, residual onto
// the image rows. Returns the refined image rows (I x model_dim).
Matrix regional_block_forward(const RegionalBlockInput& input, const BlockWeights& weights);

// Unmasked cross-attention from image rows to global-caption rows, output
// projection and residual. An empty caption leaves the input unchanged.
Matrix global_stage_forward(const Matrix& image_hidden, const Matrix& global_hidden, const BlockWeights& weights);

}  // namespace ragsr
