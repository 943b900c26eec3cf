// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable operations. Matrices are 2-D row-major; "rows" of a batch of
// token positions are stacked along the first dimension. Broadcasting is limited
// to a trailing vector (rmsnorm weights) and a one-element scalar (scale).

#pragma once

#include <cstdint>
#include <span>

#include "sharp/tensorkernel/autograd.h"

namespace sharp::tk {

inline constexpr double kRmsNormEps = 1e-5;

template <class T>
Var<T> matmul(const Var<T>& a, const Var<T>& b);

template <class T>
Var<T> transpose(const Var<T>& a);

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b);

template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b);

// Elementwise (Hadamard) product of equally shaped tensors.
template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b);

// s * a, where s holds exactly one element.
template <class T>
Var<T> scale(const Var<T>& a, const Var<T>& s);

template <class T>
Var<T> silu(const Var<T>& x);

// x / sqrt(mean(x^2) + eps) * w over the last dimension of x.
template <class T>
Var<T> rmsnorm(const Var<T>& x, const Var<T>& w, double eps = kRmsNormEps);

// Row gather: out[i] = table[ids[i]].
template <class T>
Var<T> embedding(const Var<T>& table, std::span<const std::int32_t> ids);

// Multi-head causal self-attention on stacked rows. q, k, v are
// [batch*seq x d_model]; head h uses columns [h*dh, (h+1)*dh).
template <class T>
Var<T> causal_attention(const Var<T>& q, const Var<T>& k, const Var<T>& v,
                        std::size_t batch, std::size_t seq, std::size_t n_heads);

// Mean over counted positions of -log softmax(logits)[target]. When mask is
// non-empty only positions with mask[i] != 0 count.
template <class T>
Var<T> cross_entropy_mean(const Var<T>& logits, std::span<const std::int32_t> targets,
                          std::span<const std::uint8_t> mask = {});

// mean((a - b)^2) over all elements.
template <class T>
Var<T> mse(const Var<T>& a, const Var<T>& b);

template <class T>
Var<T> sum(const Var<T>& a);

}  // namespace sharp::tk
