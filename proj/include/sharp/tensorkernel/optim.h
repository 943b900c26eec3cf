// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sharp/tensorkernel/autograd.h"

namespace sharp::tk {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <class T>
struct AdamState {
    AdamConfig config;
    std::vector<Buffer<T>> m;
    std::vector<Buffer<T>> v;
    std::uint64_t step = 0;
};

// One bias-corrected Adam update. The state is lazily sized on the first call;
// later calls must present the same parameter shapes. `lr` overrides
// state.config.lr when positive (warmup schedules).
template <class T>
void adam_step(std::span<Tensor<T>* const> params, std::span<const Buffer<T>* const> grads,
               AdamState<T>& state, double lr = -1.0);

// Convenience wrapper over a fixed set of leaf parameters.
template <class T>
class Adam {
public:
    Adam(std::vector<Var<T>> params, AdamConfig config);

    // Applies the gradients currently stored on the parameters. Parameters that
    // received no gradient are treated as having a zero gradient.
    void step(double lr = -1.0);

    const AdamState<T>& state() const { return state_; }
    const std::vector<Var<T>>& params() const { return params_; }

private:
    std::vector<Var<T>> params_;
    AdamState<T> state_;
    std::vector<Buffer<T>> zero_grads_;
};

// Scales gradients in place so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
template <class T>
double clip_grad_norm(std::span<const Var<T>> params, double max_norm);

}  // namespace sharp::tk
