#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gfss/numcore/tensor.hpp"

// Differentiable tensor operations. Every op records a backward closure when
// any input requires a gradient. Broadcasting is limited to scalar scaling
// and bias addition along one axis.
namespace gfss::num {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float factor);

/// x + bias broadcast along every axis except `axis`; bias has x.dim(axis) entries.
Tensor add_bias(const Tensor& x, const Tensor& bias, std::size_t axis);

/// [M,K] x [K,N] -> [M,N], or batched [B,M,K] x [B,K,N] -> [B,M,N].
Tensor matmul(const Tensor& a, const Tensor& b);

/// x[T,in] * w[in,out] + b[out]
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor transpose(const Tensor& x, std::size_t axis0, std::size_t axis1);
Tensor reshape(const Tensor& x, Shape shape);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor stack(const std::vector<Tensor>& parts);  // new leading axis
Tensor narrow(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length);

Tensor relu(const Tensor& x);
Tensor gelu(const Tensor& x);  // exact erf form

/// Normalizes over the last axis, then applies learnable scale and shift.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps = 1e-5f);

/// Max-subtracted softmax along `axis`.
Tensor softmax(const Tensor& x, std::size_t axis);

/// Cross-correlation. x[N,C,H,W], w[O,C,k,k] -> [N,O,Ho,Wo],
/// Ho = (H + 2*padding - k) / stride + 1.
Tensor conv2d(const Tensor& x, const Tensor& w, std::size_t stride, std::size_t padding);

Tensor max_pool2d(const Tensor& x, std::size_t kernel, std::size_t stride);

/// Resizes the last two axes (align_corners = false, edge clamped).
Tensor bilinear_upsample(const Tensor& x, std::size_t out_h, std::size_t out_w);

/// Gathers rows of table[V,D] -> [ids.size(), D].
Tensor embedding(const Tensor& table, std::span<const std::size_t> ids);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

inline constexpr float kLogClamp = 1e-12f;

/// Mean of -log(max(p[label], 1e-12)) over non-ignored pixels.
/// probs is [N,K,H,W] (or [K,H,W] with N=1); labels hold N*H*W channel indices.
Tensor cross_entropy(const Tensor& probs, std::span<const std::uint8_t> labels, int ignore_id = 255);

struct AttentionWeights {
  Tensor qkv_weight;  // [D, 3D]
  Tensor qkv_bias;    // [3D]
  Tensor out_weight;  // [D, D]
  Tensor out_bias;    // [D]
};

/// Scaled dot-product self-attention over x[T,D] with `heads` heads.
Tensor multi_head_attention(const Tensor& x, const AttentionWeights& w, std::size_t heads);

}  // namespace gfss::num
