// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include "sharp/tensorkernel/optim.h"

#include <cmath>

namespace sharp::tk {

template <class T>
void adam_step(std::span<Tensor<T>* const> params, std::span<const Buffer<T>* const> grads,
               AdamState<T>& state, double lr) {
    if (params.size() != grads.size()) throw std::invalid_argument("adam_step: params/grads count mismatch");
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.m[i].assign(params[i]->size(), T(0));
            state.v[i].assign(params[i]->size(), T(0));
        }
    }
    if (state.m.size() != params.size()) throw std::invalid_argument("adam_step: parameter set changed");
    const AdamConfig& c = state.config;
    const double rate = lr > 0.0 ? lr : c.lr;
    ++state.step;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);
    const T step_size = static_cast<T>(rate / bc1);
    const T inv_sqrt_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
    const T eps = static_cast<T>(c.eps);
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto& w = params[p]->data;
        const auto& g = *grads[p];
        auto& m = state.m[p];
        auto& v = state.v[p];
        if (g.size() != w.size() || m.size() != w.size()) {
            throw std::invalid_argument("adam_step: gradient size mismatch for parameter " + std::to_string(p));
        }
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = b1 * m[i] + (T(1) - b1) * g[i];
            v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
            w[i] -= step_size * m[i] / (std::sqrt(v[i]) * inv_sqrt_bc2 + eps);
        }
    }
}

template <class T>
Adam<T>::Adam(std::vector<Var<T>> params, AdamConfig config) : params_(std::move(params)) {
    state_.config = config;
    zero_grads_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (!params_[i].is_leaf()) throw std::invalid_argument("Adam: parameter " + std::to_string(i) + " is not a leaf");
        zero_grads_[i].assign(params_[i].size(), T(0));
    }
}

template <class T>
void Adam<T>::step(double lr) {
    std::vector<Tensor<T>*> ps;
    std::vector<const Buffer<T>*> gs;
    ps.reserve(params_.size());
    gs.reserve(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
        ps.push_back(&params_[i].mutable_leaf_value());
        const auto& g = params_[i].grad();
        gs.push_back(g.size() == params_[i].size() ? &g : &zero_grads_[i]);
    }
    adam_step<T>(ps, gs, state_, lr);
}

template <class T>
double clip_grad_norm(std::span<const Var<T>> params, double max_norm) {
    double ss = 0.0;
    for (const auto& p : params) {
        for (const T& g : p.grad()) ss += static_cast<double>(g) * static_cast<double>(g);
    }
    const double norm = std::sqrt(ss);
    if (norm > max_norm && norm > 0.0) {
        const T f = static_cast<T>(max_norm / norm);
        for (const auto& p : params) {
            for (T& g : p.node()->grad) g *= f;
        }
    }
    return norm;
}

template void adam_step<float>(std::span<Tensor<float>* const>, std::span<const Buffer<float>* const>,
                               AdamState<float>&, double);
template void adam_step<double>(std::span<Tensor<double>* const>, std::span<const Buffer<double>* const>,
                                AdamState<double>&, double);
template class Adam<float>;
template class Adam<double>;
template double clip_grad_norm<float>(std::span<const Var<float>>, double);
template double clip_grad_norm<double>(std::span<const Var<double>>, double);

}  // namespace sharp::tk
