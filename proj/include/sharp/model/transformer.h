// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0
//
// Pre-norm decoder: x += attn(rmsnorm(x)); x += mlp(rmsnorm(x)); logits =
// rmsnorm(x) * head. Positions use a learned absolute embedding.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "sharp/model/weights.h"
#include "sharp/tensorkernel/autograd.h"

namespace sharp::model {

using tk::Var;

struct LayerVars {
    Var<float> attn_norm, wq, wk, wv, wo, mlp_norm, gate, up, down;
};

// Graph handles over a WeightStore, either frozen constants or trainable leaves.
struct ModelVars {
    ModelConfig config;
    Var<float> tok_emb, pos_emb;
    std::vector<LayerVars> layers;
    Var<float> final_norm, head;

    static ModelVars constants(const WeightStore& w);
    static ModelVars parameters(const WeightStore& w);

    std::vector<Var<float>> all() const;
    // Copies current values back into a WeightStore.
    WeightStore snapshot() const;
};

// MLP weights used in place of a layer's own. A dropped layer adds nothing to
// the residual stream.
struct MlpWeights {
    Var<float> gate, up, down;
    bool dropped = false;
};

// Returns replacement MLP weights for layer l (1-based) or nullopt to use the
// layer's stored weights.
using MlpProvider = std::function<std::optional<MlpWeights>(std::size_t layer)>;

// down(silu(x * gate) (.) (x * up))
Var<float> mlp_forward(const Var<float>& x, const Var<float>& gate, const Var<float>& up, const Var<float>& down);

struct ForwardResult {
    Var<float> logits;  // [batch*seq x V]
    // Normalized MLP inputs of tapped layers, [batch*seq x d1].
    std::map<std::size_t, Tensor<float>> taps;
    // In-graph MLP outputs of tapped layers.
    std::map<std::size_t, Tensor<float>> tap_outputs;
};

// tokens holds batch*seq ids, row-major by batch.
ForwardResult forward(const ModelVars& m, std::span<const std::int32_t> tokens, std::size_t batch, std::size_t seq,
                      const MlpProvider& provider = {}, std::span<const std::size_t> taps = {});

// Mean next-token cross entropy over positions with mask != 0.
Var<float> lm_loss(const ModelVars& m, std::span<const std::int32_t> inputs, std::span<const std::int32_t> targets,
                   std::span<const std::uint8_t> mask, std::size_t batch, std::size_t seq,
                   const MlpProvider& provider = {});

struct PerplexityResult {
    double perplexity = 0.0;
    double mean_nll = 0.0;
    std::size_t tokens = 0;
};

// exp(mean NLL) of every token after the first, predicted in non-overlapping
// windows of max_seq_len positions.
PerplexityResult perplexity(const ModelVars& m, std::span<const std::int32_t> stream, const MlpProvider& provider = {},
                            std::size_t windows_per_batch = 16);

}  // namespace sharp::model
