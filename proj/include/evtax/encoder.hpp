#pragma once

// Transformer encoder forward pass (post-norm, BERT-style learned positions).
//
// Every product that feeds a position's activations is evaluated one row at
// a time, and attention sums run over unmasked keys only. A position's output
// therefore depends on nothing but the unmasked positions, bit for bit, no
// matter how much padding follows.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "evtax/common.hpp"
#include "evtax/textprep.hpp"

namespace evtax {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using ColVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using KeyMask = std::span<const std::uint8_t>;

struct EncoderConfig {
  std::size_t num_layers = 2;
  std::size_t model_dim = 64;
  std::size_t num_heads = 4;
  std::size_t ffn_dim = 128;
  std::size_t max_len = kDefaultMaxLen;
  std::size_t vocab_size = 0;
  std::uint64_t seed = 0;
  double layer_norm_eps = 1e-12;

  std::size_t head_dim() const { return model_dim / num_heads; }
  void validate() const;
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

template <typename Scalar>
struct AttentionHead {
  RowMatrix<Scalar> query;  // d_model x d_k
  RowMatrix<Scalar> key;    // d_model x d_k
  RowMatrix<Scalar> value;  // d_model x d_v
};

template <typename Scalar>
struct LayerWeights {
  std::vector<AttentionHead<Scalar>> heads;
  RowMatrix<Scalar> output;  // h*d_v x d_model
  RowMatrix<Scalar> ffn_in;  // d_model x d_ff
  ColVector<Scalar> ffn_in_bias;
  RowMatrix<Scalar> ffn_out;  // d_ff x d_model
  ColVector<Scalar> ffn_out_bias;
  ColVector<Scalar> attn_norm_gain, attn_norm_bias;
  ColVector<Scalar> ffn_norm_gain, ffn_norm_bias;
};

template <typename Scalar>
struct EncoderWeights {
  EncoderConfig config;
  RowMatrix<Scalar> token_embedding;     // vocab_size x d_model
  RowMatrix<Scalar> position_embedding;  // max_len x d_model
  std::vector<LayerWeights<Scalar>> layers;
};

/// Max-subtracted softmax.
template <typename Derived>
ColVector<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  ColVector<Scalar> out = (v.array() - v.maxCoeff()).exp().matrix();
  Scalar total = 0;
  for (Eigen::Index i = 0; i < out.size(); ++i) total += out[i];
  return out / total;
}

/// out.row(r) = in.row(r) * w, evaluated per row.
template <typename Scalar>
RowMatrix<Scalar> rowwise_product(const RowMatrix<Scalar>& in, const RowMatrix<Scalar>& w) {
  if (in.cols() != w.rows()) throw Error("shape mismatch in projection");
  RowMatrix<Scalar> out(in.rows(), w.cols());
  for (Eigen::Index r = 0; r < in.rows(); ++r) out.row(r).noalias() = in.row(r) * w;
  return out;
}

/// softmax(Q K^T / sqrt(d_k)) restricted to unmasked keys; masked entries
/// are exactly zero.
template <typename Scalar>
RowMatrix<Scalar> attention_weights(const RowMatrix<Scalar>& q, const RowMatrix<Scalar>& k,
                                    KeyMask mask) {
  if (q.cols() != k.cols()) throw Error("attention: query/key width mismatch");
  if (static_cast<Eigen::Index>(mask.size()) != k.rows())
    throw Error("attention: mask length differs from key count");
  std::vector<Eigen::Index> live;
  for (std::size_t j = 0; j < mask.size(); ++j)
    if (mask[j]) live.push_back(static_cast<Eigen::Index>(j));
  if (live.empty()) throw Error("attention: no attendable position");

  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(q.cols()));
  RowMatrix<Scalar> weights = RowMatrix<Scalar>::Zero(q.rows(), k.rows());
  ColVector<Scalar> scores(static_cast<Eigen::Index>(live.size()));
  for (Eigen::Index r = 0; r < q.rows(); ++r) {
    for (std::size_t s = 0; s < live.size(); ++s)
      scores[static_cast<Eigen::Index>(s)] = q.row(r).dot(k.row(live[s])) * scale;
    ColVector<Scalar> p = softmax(scores);
    for (std::size_t s = 0; s < live.size(); ++s)
      weights(r, live[s]) = p[static_cast<Eigen::Index>(s)];
  }
  return weights;
}

template <typename Scalar>
RowMatrix<Scalar> scaled_dot_attention(const RowMatrix<Scalar>& q, const RowMatrix<Scalar>& k,
                                       const RowMatrix<Scalar>& v, KeyMask mask) {
  if (k.rows() != v.rows()) throw Error("attention: key/value count mismatch");
  RowMatrix<Scalar> weights = attention_weights(q, k, mask);
  RowMatrix<Scalar> out = RowMatrix<Scalar>::Zero(q.rows(), v.cols());
  for (Eigen::Index r = 0; r < q.rows(); ++r)
    for (Eigen::Index j = 0; j < k.rows(); ++j)
      if (mask[static_cast<std::size_t>(j)]) out.row(r) += weights(r, j) * v.row(j);
  return out;
}

/// Concat(head_1..head_h) W^O with head_i = Attention(X W_i^Q, X W_i^K, X W_i^V).
template <typename Scalar>
RowMatrix<Scalar> multi_head(const RowMatrix<Scalar>& x, const LayerWeights<Scalar>& layer,
                             KeyMask mask) {
  if (layer.heads.empty()) throw Error("multi_head: no heads");
  Eigen::Index concat_width = 0;
  for (const auto& head : layer.heads) concat_width += head.value.cols();
  if (concat_width != layer.output.rows()) throw Error("multi_head: output projection shape");
  RowMatrix<Scalar> concat(x.rows(), concat_width);
  Eigen::Index col = 0;
  for (const auto& head : layer.heads) {
    RowMatrix<Scalar> h = scaled_dot_attention<Scalar>(rowwise_product(x, head.query),
                                                       rowwise_product(x, head.key),
                                                       rowwise_product(x, head.value), mask);
    concat.middleCols(col, h.cols()) = h;
    col += h.cols();
  }
  return rowwise_product(concat, layer.output);
}

/// (x - mean) / sqrt(var + eps) * gain + bias, population variance.
template <typename Derived>
ColVector<typename Derived::Scalar> layer_norm(
    const Eigen::MatrixBase<Derived>& x,
    const ColVector<typename Derived::Scalar>& gain,
    const ColVector<typename Derived::Scalar>& bias, typename Derived::Scalar eps) {
  using Scalar = typename Derived::Scalar;
  if (x.size() != gain.size() || x.size() != bias.size()) throw Error("layer_norm: shape mismatch");
  const Scalar n = static_cast<Scalar>(x.size());
  const Scalar mean = x.sum() / n;
  ColVector<Scalar> centered = x;
  centered.array() -= mean;
  const Scalar var = centered.squaredNorm() / n;
  return (centered.array() / std::sqrt(var + eps) * gain.array() + bias.array()).matrix();
}

template <typename Scalar>
RowMatrix<Scalar> layer_norm_rows(const RowMatrix<Scalar>& x, const ColVector<Scalar>& gain,
                                  const ColVector<Scalar>& bias, Scalar eps) {
  RowMatrix<Scalar> out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    out.row(r) = layer_norm(x.row(r).transpose(), gain, bias, eps).transpose();
  return out;
}

/// Position-wise max(0, x W1 + b1) W2 + b2.
template <typename Scalar>
RowMatrix<Scalar> feed_forward(const RowMatrix<Scalar>& x, const LayerWeights<Scalar>& layer) {
  RowMatrix<Scalar> hidden = rowwise_product(x, layer.ffn_in);
  hidden.rowwise() += layer.ffn_in_bias.transpose();
  hidden = hidden.cwiseMax(Scalar(0));
  RowMatrix<Scalar> out = rowwise_product(hidden, layer.ffn_out);
  out.rowwise() += layer.ffn_out_bias.transpose();
  return out;
}

/// A = LN(X + MultiHead(X)); X' = LN(A + FFN(A)).
template <typename Scalar>
RowMatrix<Scalar> encoder_layer(const RowMatrix<Scalar>& x, const LayerWeights<Scalar>& layer,
                                KeyMask mask, Scalar eps) {
  RowMatrix<Scalar> attended = multi_head(x, layer, mask);
  if (attended.rows() != x.rows() || attended.cols() != x.cols())
    throw Error("encoder_layer: attention output shape");
  RowMatrix<Scalar> a = layer_norm_rows<Scalar>(x + attended, layer.attn_norm_gain,
                                                layer.attn_norm_bias, eps);
  RowMatrix<Scalar> ff = feed_forward(a, layer);
  return layer_norm_rows<Scalar>(a + ff, layer.ffn_norm_gain, layer.ffn_norm_bias, eps);
}

/// Token plus position embeddings followed by every layer; one row per position.
template <typename Scalar>
RowMatrix<Scalar> hidden_states(const TokenSequence& seq, const EncoderWeights<Scalar>& w) {
  const auto n = seq.ids.size();
  if (seq.mask.size() != n) throw Error("encode: ids/mask length mismatch");
  if (n == 0 || n > w.config.max_len) throw Error("encode: sequence longer than max_len");
  RowMatrix<Scalar> x(static_cast<Eigen::Index>(n), w.token_embedding.cols());
  for (std::size_t i = 0; i < n; ++i) {
    auto id = seq.ids[i];
    if (id < 0 || static_cast<Eigen::Index>(id) >= w.token_embedding.rows())
      throw Error("encode: token id " + std::to_string(id) + " outside the vocabulary");
    auto r = static_cast<Eigen::Index>(i);
    x.row(r) = w.token_embedding.row(id) + w.position_embedding.row(r);
  }
  const Scalar eps = static_cast<Scalar>(w.config.layer_norm_eps);
  for (const auto& layer : w.layers) x = encoder_layer(x, layer, KeyMask(seq.mask), eps);
  return x;
}

/// Sentence vector: the hidden state at the CLS position.
template <typename Scalar>
ColVector<Scalar> encode(const TokenSequence& seq, const EncoderWeights<Scalar>& w) {
  return hidden_states(seq, w).row(0).transpose();
}

/// Seeded init: matrices uniform with standard deviation 1/sqrt(d_model),
/// layer-norm gains 1, every bias 0.
EncoderWeights<double> init_weights(const EncoderConfig& config);

/// Checks every shape against `weights.config` and that entries are finite.
void validate_weights(const EncoderWeights<double>& weights);

void save_weights(const EncoderWeights<double>& weights, const std::filesystem::path& path);
/// Rejects a bad header, shape disagreement, and, when `expected` is given,
/// a config that differs from it.
EncoderWeights<double> load_weights(const std::filesystem::path& path,
                                    const EncoderConfig* expected = nullptr);

}  // namespace evtax
