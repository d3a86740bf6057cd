// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "upright/nn/tensor.hpp"

#include <vector>

namespace upright::nn {

// Elementwise binary ops. `b` must have the same shape as `a` or a shape equal to a
// trailing suffix of it, in which case it is broadcast over the leading dimensions.
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
/// Same shapes only.
template <typename T> Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b);

template <typename T> Tensor<T> scale(const Tensor<T>& a, T s);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& a, T s);

template <typename T> Tensor<T> relu(const Tensor<T>& a);
template <typename T> Tensor<T> leaky_relu(const Tensor<T>& a, T slope);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& a);
template <typename T> Tensor<T> tanh(const Tensor<T>& a);
template <typename T> Tensor<T> abs(const Tensor<T>& a);
template <typename T> Tensor<T> square(const Tensor<T>& a);
/// 0.5 d^2 for |d| <= 1, |d| - 0.5 otherwise.
template <typename T> Tensor<T> smooth_l1(const Tensor<T>& a);

template <typename T> Tensor<T> sum(const Tensor<T>& a);
template <typename T> Tensor<T> mean(const Tensor<T>& a);

template <typename T> Tensor<T> reshape(const Tensor<T>& a, Shape shape);
template <typename T> Tensor<T> permute(const Tensor<T>& a, const std::vector<int>& axes);

/// Batched matrix product over equal leading dims: (..., M, K) x (..., K, N).
template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> softmax_last(const Tensor<T>& a);

/// x (..., in) * W^T + b with W (out, in), b (out) or empty.
template <typename T> Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>* bias);

/// Zero-padded cross-correlation. x (N, C, H, W), weight (O, C, k, k), bias (O) or null.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>* bias, int stride, int padding);

/// 2x2 window, stride 2; gradient goes to the first maximum in row-major order.
template <typename T> Tensor<T> maxpool2(const Tensor<T>& x);
/// (N, C, H, W) -> (N, C).
template <typename T> Tensor<T> global_avgpool(const Tensor<T>& x);

/// Normalizes over the last dimension, then applies per-feature gain and shift.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& shift, T eps = T(1e-5));

/// Half-pixel-centered bilinear upsampling of (N, C, H, W) by an integer factor. Beyond
/// the outer sample centers the edge pair is extended linearly, so linear ramps are
/// reproduced exactly everywhere.
template <typename T> Tensor<T> bilinear_upsample(const Tensor<T>& x, int factor);

/// Row gather: table (V, D), indices in [0, V) -> (indices.size(), D).
template <typename T> Tensor<T> embedding(const Tensor<T>& table, const std::vector<int>& indices);

/// Mean binary cross-entropy between probabilities p and a constant target in {0, 1}.
template <typename T> Tensor<T> bce(const Tensor<T>& p, T target);
template <typename T> Tensor<T> mse(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> l1(const Tensor<T>& a, const Tensor<T>& b);

/// Multi-head scaled dot-product self-attention over x (N, T, D).
/// Projections are (D, D) with (D) biases; D must be divisible by `heads`.
template <typename T>
Tensor<T> multihead_self_attention(const Tensor<T>& x, int heads, const Tensor<T>& wq, const Tensor<T>& bq,
                                   const Tensor<T>& wk, const Tensor<T>& bk, const Tensor<T>& wv,
                                   const Tensor<T>& bv, const Tensor<T>& wo, const Tensor<T>& bo);

/// Same attention with diagonal projections: q = x*wq + bq elementwise, all (D).
template <typename T>
Tensor<T> diagonal_self_attention(const Tensor<T>& x, int heads, const Tensor<T>& wq, const Tensor<T>& bq,
                                  const Tensor<T>& wk, const Tensor<T>& bk, const Tensor<T>& wv,
                                  const Tensor<T>& bv, const Tensor<T>& wo, const Tensor<T>& bo);

}  // namespace upright::nn
