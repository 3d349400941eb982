#pragma once

// Reusable differentiable layers: Linear, two-layer MLP, dropout sites,
// layer norm wrappers and multi-head self-attention over a token axis.
//
// Layers register their tensors into a ParamRegistry at construction; the
// registration order fixes checkpoint layout. Dropout sites draw their masks
// from a counter-based stream: (run seed, site stream id, per-site call
// counter), so masks depend only on the call sequence of that site.

#include <cstdint>
#include <string>
#include <vector>

#include "hpmixer/ops.hpp"
#include "hpmixer/params.hpp"
#include "hpmixer/rng.hpp"

namespace hpmixer {

/// Per-forward-call context. `seed` keys every dropout mask of the run.
struct RunContext {
  bool training = false;
  std::uint64_t seed = 0;
};

/// Affine map over the last axis: y = x W + b, W: (in, out), b: (out).
template <typename T>
struct Linear {
  Tensor<T> weight;
  Tensor<T> bias;

  Linear() = default;

  Linear(ParamRegistry<T>& reg, const std::string& prefix, std::size_t in,
         std::size_t out, Rng& rng, bool trainable = true) {
    const T bound = static_cast<T>(1.0 / std::sqrt(static_cast<double>(in)));
    weight = reg.add(prefix + ".weight",
                     Tensor<T>::rand_uniform({in, out}, rng, -bound, bound),
                     trainable);
    bias = reg.add(prefix + ".bias", Tensor<T>(Shape{out}), trainable);
  }

  Tensor<T> forward(Tensor<T> x) const {
    return add_rowvec(matmul(std::move(x), weight), bias);
  }
};

/// One dropout site with its own deterministic mask stream.
template <typename T>
struct DropoutSite {
  T rate = T(0);
  std::uint64_t stream_id = 0;
  mutable std::uint64_t calls = 0;  // advances once per training-mode call

  Tensor<T> forward(Tensor<T> x, const RunContext& ctx) const {
    if (!ctx.training || rate == T(0)) return x;
    return dropout(std::move(x), rate, true, ctx.seed, stream_id, calls++);
  }
};

/// Two-layer MLP over the last axis: fc2(drop(gelu(fc1(x)))).
template <typename T>
struct Mlp {
  Linear<T> fc1, fc2;
  DropoutSite<T> drop;

  Mlp() = default;

  Mlp(ParamRegistry<T>& reg, const std::string& prefix, std::size_t in,
      std::size_t hidden, std::size_t out, Rng& rng, T drop_rate,
      std::uint64_t stream_id) {
    fc1 = Linear<T>(reg, prefix + ".fc1", in, hidden, rng);
    fc2 = Linear<T>(reg, prefix + ".fc2", hidden, out, rng);
    drop.rate = drop_rate;
    drop.stream_id = stream_id;
  }

  Tensor<T> forward(Tensor<T> x, const RunContext& ctx) const {
    return fc2.forward(drop.forward(gelu(fc1.forward(std::move(x))), ctx));
  }
};

/// Learnable layer norm over the last axis.
template <typename T>
struct LayerNorm {
  Tensor<T> gamma, beta;

  LayerNorm() = default;

  LayerNorm(ParamRegistry<T>& reg, const std::string& prefix, std::size_t n,
            bool trainable = true) {
    gamma = reg.add(prefix + ".gamma", Tensor<T>(Shape{n}, T(1)), trainable);
    beta = reg.add(prefix + ".beta", Tensor<T>(Shape{n}), trainable);
  }

  Tensor<T> forward(Tensor<T> x) const {
    return layer_norm(std::move(x), gamma, beta);
  }
};

/// Multi-head self-attention over the second-to-last axis (tokens), feature
/// size d_model on the last axis. No positional encoding anywhere, so the
/// layer is equivariant to token permutations.
template <typename T>
struct MultiHeadSelfAttention {
  Linear<T> wq, wk, wv, wo;
  std::size_t n_heads = 1;
  std::size_t d_model = 0;

  MultiHeadSelfAttention() = default;

  MultiHeadSelfAttention(ParamRegistry<T>& reg, const std::string& prefix,
                         std::size_t d, std::size_t heads, Rng& rng)
      : n_heads(heads), d_model(d) {
    wq = Linear<T>(reg, prefix + ".wq", d, d, rng);
    wk = Linear<T>(reg, prefix + ".wk", d, d, rng);
    wv = Linear<T>(reg, prefix + ".wv", d, d, rng);
    wo = Linear<T>(reg, prefix + ".wo", d, d, rng);
  }

  Tensor<T> forward(Tensor<T> x) const {
    const std::size_t rank = x.rank();
    if (rank < 2 || x.shape().back() != d_model) {
      throw ShapeError("attention: expected (..., tokens, " +
                       std::to_string(d_model) + "), got " + shape_str(x.shape()));
    }
    const std::size_t tokens = x.dim(rank - 2);
    const std::size_t dh = d_model / n_heads;

    // (..., tok, d) -> (..., tok, h, dh) -> (..., h, tok, dh)
    Shape split_shape = x.shape();
    split_shape.back() = n_heads;
    split_shape.push_back(dh);
    std::vector<std::size_t> to_heads(split_shape.size());
    for (std::size_t i = 0; i < to_heads.size(); ++i) to_heads[i] = i;
    std::swap(to_heads[split_shape.size() - 3], to_heads[split_shape.size() - 2]);

    auto split = [&](Tensor<T> t) {
      return permute(reshape(std::move(t), split_shape), to_heads);
    };
    Tensor<T> q = split(wq.forward(x));
    Tensor<T> k = split(wk.forward(x));
    Tensor<T> v = split(wv.forward(x));

    const T inv_sqrt_dh = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
    Tensor<T> scores = scale(matmul(q, transpose_last(k)), inv_sqrt_dh);
    Tensor<T> attn = softmax_lastdim(scores);
    Tensor<T> ctx = matmul(attn, v);  // (..., h, tok, dh)

    // back to (..., tok, d)
    Tensor<T> merged = permute(ctx, to_heads);  // swap is its own inverse
    Shape out_shape = x.shape();
    out_shape[rank - 2] = tokens;
    merged = reshape(merged, out_shape);
    return wo.forward(merged);
  }
};

/// Post-norm transformer encoder layer (attention + FFN, residuals, LN).
template <typename T>
struct EncoderLayer {
  MultiHeadSelfAttention<T> attn;
  LayerNorm<T> ln1, ln2;
  Linear<T> ffn1, ffn2;
  DropoutSite<T> drop_attn, drop_ffn;

  EncoderLayer() = default;

  EncoderLayer(ParamRegistry<T>& reg, const std::string& prefix, std::size_t d,
               std::size_t d_ff, std::size_t heads, Rng& rng, T drop_rate,
               std::uint64_t stream_base) {
    attn = MultiHeadSelfAttention<T>(reg, prefix + ".attn", d, heads, rng);
    ln1 = LayerNorm<T>(reg, prefix + ".ln1", d);
    ffn1 = Linear<T>(reg, prefix + ".ffn1", d, d_ff, rng);
    ffn2 = Linear<T>(reg, prefix + ".ffn2", d_ff, d, rng);
    ln2 = LayerNorm<T>(reg, prefix + ".ln2", d);
    drop_attn.rate = drop_rate;
    drop_attn.stream_id = stream_base;
    drop_ffn.rate = drop_rate;
    drop_ffn.stream_id = stream_base + 1;
  }

  Tensor<T> forward(Tensor<T> x, const RunContext& ctx) const {
    Tensor<T> a = drop_attn.forward(attn.forward(x), ctx);
    x = ln1.forward(add(x, std::move(a)));
    Tensor<T> f = drop_ffn.forward(ffn2.forward(gelu(ffn1.forward(x))), ctx);
    return ln2.forward(add(x, std::move(f)));
  }
};

/// Channel-mixing encoder: treats the C channels of one coarse patch as
/// tokens. Input (B, C, N_co, P_co); embeds P_co -> d_model, runs e_layers
/// of self-attention over channels, projects back to P_co.
template <typename T>
struct ChannelMixingEncoder {
  Linear<T> embed, proj;
  std::vector<EncoderLayer<T>> layers;

  ChannelMixingEncoder() = default;

  ChannelMixingEncoder(ParamRegistry<T>& reg, const std::string& prefix,
                       std::size_t patch_len, std::size_t d, std::size_t d_ff,
                       std::size_t heads, std::size_t e_layers, Rng& rng,
                       T drop_rate, std::uint64_t& stream_counter) {
    embed = Linear<T>(reg, prefix + ".embed", patch_len, d, rng);
    layers.reserve(e_layers);
    for (std::size_t l = 0; l < e_layers; ++l) {
      layers.emplace_back(reg, prefix + ".l" + std::to_string(l), d, d_ff, heads,
                          rng, drop_rate, stream_counter);
      stream_counter += 2;
    }
    proj = Linear<T>(reg, prefix + ".proj", d, patch_len, rng);
  }

  Tensor<T> forward(Tensor<T> x, const RunContext& ctx) const {
    if (x.rank() != 4) {
      throw ShapeError("channel encoder: expected (B, C, N, P), got " +
                       shape_str(x.shape()));
    }
    // (B, C, N, P) -> (B, N, C, P): attention runs over the C axis.
    Tensor<T> t = permute(std::move(x), {0, 2, 1, 3});
    t = embed.forward(std::move(t));
    for (const auto& layer : layers) t = layer.forward(std::move(t), ctx);
    t = proj.forward(std::move(t));
    return permute(std::move(t), {0, 2, 1, 3});
  }
};

}  // namespace hpmixer
