#include "ragsr/attention.hpp"

#include <cmath>
#include <limits>

#include "ragsr/error.hpp"
#include "ragsr/rng.hpp"

namespace ragsr {
namespace {

constexpr const char* kModule = "attention_core";

std::string dims(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

void check_batch(const AttentionBatch& batch) {
  if (batch.heads.empty()) throw Error(ErrorKind::Shape, kModule, "attention batch has no heads");
  if (!std::isfinite(batch.scale)) throw Error(ErrorKind::NonFinite, kModule, "scale is not finite");
  const auto& first = batch.heads.front();
  for (std::size_t h = 0; h < batch.heads.size(); ++h) {
    const auto& head = batch.heads[h];
    const std::string where = "head " + std::to_string(h) + ": ";
    if (head.q.rows() != first.q.rows() || head.k.rows() != first.k.rows()) {
      throw Error(ErrorKind::Shape, kModule, where + "sequence lengths differ between heads");
    }
    if (head.q.cols() != head.k.cols()) {
      throw Error(ErrorKind::Shape, kModule, where + "Q is " + dims(head.q) + " but K is " + dims(head.k));
    }
    if (head.k.rows() != head.v.rows()) {
      throw Error(ErrorKind::Shape, kModule, where + "K is " + dims(head.k) + " but V is " + dims(head.v));
    }
    if (!head.q.all_finite() || !head.k.all_finite() || !head.v.all_finite()) {
      throw Error(ErrorKind::NonFinite, kModule, where + "non-finite value in Q, K or V");
    }
  }
}

// mask == nullptr means every pair is allowed.
AttentionResult forward_impl(const AttentionBatch& batch, const BitMatrix* mask) {
  check_batch(batch);
  const std::size_t nq = batch.queries();
  const std::size_t nk = batch.keys();
  if (mask) {
    if (mask->rows() != nq || mask->cols() != nk) {
      throw Error(ErrorKind::Shape, kModule,
                  "mask is " + std::to_string(mask->rows()) + "x" + std::to_string(mask->cols()) + ", expected " +
                      std::to_string(nq) + "x" + std::to_string(nk));
    }
    for (std::size_t i = 0; i < nq; ++i) {
      if (!mask->row_any(i)) {
        throw Error(ErrorKind::EmptyMaskRow, kModule, "mask row " + std::to_string(i) + " allows no keys");
      }
    }
  } else if (nk == 0 && nq > 0) {
    throw Error(ErrorKind::EmptyMaskRow, kModule, "attention over an empty key sequence");
  }

  AttentionResult result;
  result.outputs.reserve(batch.heads.size());
  result.weights.reserve(batch.heads.size());
  std::vector<double> logits(nk);
  for (const auto& head : batch.heads) {
    const std::size_t dh = head.q.cols();
    const std::size_t dv = head.v.cols();
    Matrix weights(nq, nk);
    Matrix out(nq, dv);
    for (std::size_t i = 0; i < nq; ++i) {
      const std::uint8_t* allowed = mask ? mask->row(i) : nullptr;
      const double* q = head.q.row(i);
      double row_max = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < nk; ++j) {
        if (allowed && !allowed[j]) continue;
        const double* k = head.k.row(j);
        double dot = 0.0;
        for (std::size_t d = 0; d < dh; ++d) dot += q[d] * k[d];
        logits[j] = batch.scale * dot;
        if (logits[j] > row_max) row_max = logits[j];
      }
      double denom = 0.0;
      double* w = weights.row(i);
      for (std::size_t j = 0; j < nk; ++j) {
        if (allowed && !allowed[j]) continue;
        w[j] = std::exp(logits[j] - row_max);
        denom += w[j];
      }
      double* o = out.row(i);
      for (std::size_t j = 0; j < nk; ++j) {
        if (allowed && !allowed[j]) continue;
        w[j] /= denom;
        const double* v = head.v.row(j);
        for (std::size_t d = 0; d < dv; ++d) o[d] += w[j] * v[d];
      }
    }
    result.outputs.push_back(std::move(out));
    result.weights.push_back(std::move(weights));
  }
  return result;
}

Matrix split_head(const Matrix& projected, std::size_t head, std::size_t head_dim) {
  return projected.col_block(head * head_dim, head_dim);
}

Matrix project_output(const AttentionResult& attn, const BlockWeights& w) {
  const std::size_t rows = attn.outputs.front().rows();
  Matrix concat(rows, w.model_dim);
  for (std::size_t h = 0; h < w.heads; ++h) concat.set_col_block(h * w.head_dim(), attn.outputs[h]);
  return matmul(concat, w.wo);
}

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double stddev) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.normal(0.0, stddev);
  return m;
}

}  // namespace

AttentionBatch AttentionBatch::with_default_scale(std::vector<HeadInputs> heads) {
  AttentionBatch b;
  const std::size_t dh = heads.empty() ? 1 : heads.front().q.cols();
  b.scale = 1.0 / std::sqrt(static_cast<double>(dh == 0 ? 1 : dh));
  b.heads = std::move(heads);
  return b;
}

AttentionResult masked_attention_forward(const AttentionBatch& batch, const BitMatrix& mask) {
  return forward_impl(batch, &mask);
}

AttentionResult attention_forward(const AttentionBatch& batch) { return forward_impl(batch, nullptr); }

AttentionGrads masked_attention_backward(const AttentionBatch& batch, const AttentionResult& saved,
                                         std::span<const Matrix> upstream) {
  check_batch(batch);
  const std::size_t H = batch.heads.size();
  if (saved.weights.size() != H || upstream.size() != H) {
    throw Error(ErrorKind::Shape, kModule, "saved state or upstream gradient has the wrong head count");
  }
  const std::size_t nq = batch.queries();
  const std::size_t nk = batch.keys();

  AttentionGrads g;
  for (std::size_t h = 0; h < H; ++h) {
    const auto& head = batch.heads[h];
    const Matrix& P = saved.weights[h];
    const Matrix& dO = upstream[h];
    if (P.rows() != nq || P.cols() != nk) throw Error(ErrorKind::Shape, kModule, "saved weights have the wrong shape");
    if (dO.rows() != nq || dO.cols() != head.v.cols()) {
      throw Error(ErrorKind::Shape, kModule,
                  "upstream gradient is " + dims(dO) + ", expected " + std::to_string(nq) + "x" +
                      std::to_string(head.v.cols()));
    }
    if (!dO.all_finite()) throw Error(ErrorKind::NonFinite, kModule, "non-finite upstream gradient");

    const std::size_t dh = head.q.cols();
    const std::size_t dv = head.v.cols();
    Matrix dq(nq, dh), dk(nk, dh), dvm(nk, dv);
    std::vector<double> dP(nk);
    for (std::size_t i = 0; i < nq; ++i) {
      const double* p = P.row(i);
      const double* go = dO.row(i);
      double row_dot = 0.0;
      for (std::size_t j = 0; j < nk; ++j) {
        if (p[j] == 0.0) continue;
        const double* v = head.v.row(j);
        double acc = 0.0;
        for (std::size_t d = 0; d < dv; ++d) acc += go[d] * v[d];
        dP[j] = acc;
        row_dot += p[j] * acc;
        double* gv = dvm.row(j);
        for (std::size_t d = 0; d < dv; ++d) gv[d] += p[j] * go[d];
      }
      const double* q = head.q.row(i);
      double* gq = dq.row(i);
      for (std::size_t j = 0; j < nk; ++j) {
        if (p[j] == 0.0) continue;
        const double ds = batch.scale * p[j] * (dP[j] - row_dot);
        const double* k = head.k.row(j);
        double* gk = dk.row(j);
        for (std::size_t d = 0; d < dh; ++d) {
          gq[d] += ds * k[d];
          gk[d] += ds * q[d];
        }
      }
    }
    g.dq.push_back(std::move(dq));
    g.dk.push_back(std::move(dk));
    g.dv.push_back(std::move(dvm));
  }
  return g;
}

void validate(const BlockWeights& w) {
  if (w.model_dim == 0 || w.heads == 0 || w.model_dim % w.heads != 0) {
    throw Error(ErrorKind::Config, kModule,
                "model_dim " + std::to_string(w.model_dim) + " must be a positive multiple of heads " +
                    std::to_string(w.heads));
  }
  for (const Matrix* m : {&w.wq, &w.wk, &w.wv, &w.wo}) {
    if (m->rows() != w.model_dim || m->cols() != w.model_dim) {
      throw Error(ErrorKind::Shape, kModule,
                  "projection is " + dims(*m) + ", expected " + std::to_string(w.model_dim) + "x" +
                      std::to_string(w.model_dim));
    }
    if (!m->all_finite()) throw Error(ErrorKind::NonFinite, kModule, "non-finite projection weight");
  }
}

BlockWeights init_block_weights(std::size_t model_dim, std::size_t heads, std::uint64_t seed, double gain,
                                bool residual) {
  Rng rng(seed);
  const double stddev = gain / std::sqrt(static_cast<double>(model_dim));
  BlockWeights w;
  w.model_dim = model_dim;
  w.heads = heads;
  w.wq = random_matrix(model_dim, model_dim, rng, stddev);
  w.wk = random_matrix(model_dim, model_dim, rng, stddev);
  w.wv = random_matrix(model_dim, model_dim, rng, stddev);
  w.wo = random_matrix(model_dim, model_dim, rng, stddev);
  w.residual = residual;
  validate(w);
  return w;
}

BlockWeights identity_block_weights(std::size_t model_dim, std::size_t heads, bool residual) {
  const Matrix eye = Matrix::identity(model_dim);
  BlockWeights w{model_dim, heads, eye, eye, eye, eye, residual};
  validate(w);
  return w;
}

BlockWeights zero_block_weights(std::size_t model_dim, std::size_t heads, bool residual) {
  const Matrix zero(model_dim, model_dim);
  BlockWeights w{model_dim, heads, zero, zero, zero, zero, residual};
  validate(w);
  return w;
}

RegionalBlockInput make_regional_input(Matrix image_hidden, Matrix text_hidden, const RegionalMask& mask) {
  return RegionalBlockInput{std::move(image_hidden), std::move(text_hidden), mask.joint};
}

Matrix regional_block_forward(const RegionalBlockInput& input, const BlockWeights& weights) {
  validate(weights);
  const std::size_t I = input.image_hidden.rows();
  const std::size_t T = input.text_hidden.rows();
  if (input.image_hidden.cols() != weights.model_dim || (T > 0 && input.text_hidden.cols() != weights.model_dim)) {
    throw Error(ErrorKind::Shape, kModule, "hidden states do not match model_dim " + std::to_string(weights.model_dim));
  }
  if (input.mask.rows() != T + I || input.mask.cols() != T + I) {
    throw Error(ErrorKind::Shape, kModule,
                "joint mask is " + std::to_string(input.mask.rows()) + "x" + std::to_string(input.mask.cols()) +
                    " but the sequence has " + std::to_string(T) + " text and " + std::to_string(I) + " image tokens");
  }

  const Matrix joint = vstack(input.text_hidden, input.image_hidden);
  const Matrix q = matmul(joint, weights.wq);
  const Matrix k = matmul(joint, weights.wk);
  const Matrix v = matmul(joint, weights.wv);
  std::vector<HeadInputs> heads;
  for (std::size_t h = 0; h < weights.heads; ++h) {
    heads.push_back({split_head(q, h, weights.head_dim()), split_head(k, h, weights.head_dim()),
                     split_head(v, h, weights.head_dim())});
  }
  const AttentionResult attn = masked_attention_forward(AttentionBatch::with_default_scale(std::move(heads)), input.mask);
  Matrix refined = project_output(attn, weights).row_block(T, I);
  if (weights.residual) refined = add(input.image_hidden, refined);
  return refined;
}

Matrix global_stage_forward(const Matrix& image_hidden, const Matrix& global_hidden, const BlockWeights& weights) {
  validate(weights);
  if (image_hidden.cols() != weights.model_dim) {
    throw Error(ErrorKind::Shape, kModule, "image hidden is " + dims(image_hidden) + ", model_dim is " +
                                               std::to_string(weights.model_dim));
  }
  if (global_hidden.rows() == 0) return image_hidden;
  if (global_hidden.cols() != weights.model_dim) {
    throw Error(ErrorKind::Shape, kModule, "global caption hidden is " + dims(global_hidden) + ", model_dim is " +
                                               std::to_string(weights.model_dim));
  }

  const Matrix q = matmul(image_hidden, weights.wq);
  const Matrix k = matmul(global_hidden, weights.wk);
  const Matrix v = matmul(global_hidden, weights.wv);
  std::vector<HeadInputs> heads;
  for (std::size_t h = 0; h < weights.heads; ++h) {
    heads.push_back({split_head(q, h, weights.head_dim()), split_head(k, h, weights.head_dim()),
                     split_head(v, h, weights.head_dim())});
  }
  const AttentionResult attn = attention_forward(AttentionBatch::with_default_scale(std::move(heads)));
  Matrix out = project_output(attn, weights);
  if (weights.residual) out = add(image_hidden, out);
  return out;
}

}  // namespace ragsr
