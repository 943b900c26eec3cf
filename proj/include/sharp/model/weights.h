// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sharp/tensorkernel/tensor.h"

namespace sharp::model {

using tk::Tensor;

struct ModelConfig {
    std::size_t n_layers = 12;
    std::size_t d_model = 64;
    std::size_t d_hidden = 172;
    std::size_t n_heads = 4;
    std::size_t vocab_size = 257;
    std::size_t max_seq_len = 64;
    std::uint64_t seed = 0;

    // Throws std::invalid_argument naming the offending field.
    void validate() const;
    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// The three projections of a gated MLP block.
enum class Role { Gate, Up, Down };
inline constexpr Role kMlpRoles[] = {Role::Gate, Role::Up, Role::Down};

const char* role_name(Role r);
Role role_from_name(const std::string& name);

struct LayerWeights {
    Tensor<float> attn_norm;  // [d1]
    Tensor<float> wq, wk, wv, wo;  // [d1 x d1]
    Tensor<float> mlp_norm;  // [d1]
    Tensor<float> gate, up;  // [d1 x d2]
    Tensor<float> down;  // [d2 x d1]

    Tensor<float>& mlp(Role r);
    const Tensor<float>& mlp(Role r) const;
};

struct WeightStore {
    ModelConfig config;
    Tensor<float> tok_emb;  // [V x d1]
    Tensor<float> pos_emb;  // [T x d1]
    std::vector<LayerWeights> layers;
    Tensor<float> final_norm;  // [d1]
    Tensor<float> head;  // [d1 x V]

    // Layers are numbered 1..N.
    LayerWeights& layer(std::size_t l);
    const LayerWeights& layer(std::size_t l) const;
    const Tensor<float>& mlp(std::size_t l, Role r) const { return layer(l).mlp(r); }

    // Stable (name, tensor) listing covering every tensor, in storage order.
    std::vector<std::pair<std::string, const Tensor<float>*>> named() const;
    std::vector<std::pair<std::string, Tensor<float>*>> named_mutable();

    std::size_t parameter_count() const;
};

// V*d1 + T*d1 + N*(4*d1^2 + 3*d1*d2 + 2*d1) + d1 + d1*V
std::size_t parameter_count(const ModelConfig& c);

// Projections, embeddings and head ~ N(0, 0.02); norm scales are ones.
WeightStore init_model(const ModelConfig& config);

// SHA-1 over the raw bytes of every tensor in name order, hex encoded.
std::string weights_digest(const WeightStore& w);

}  // namespace sharp::model
