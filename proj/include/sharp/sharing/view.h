// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <span>
#include <vector>

#include "sharp/model/transformer.h"
#include "sharp/sharing/transform.h"

namespace sharp::sharing {

// Graph handles over a RecoveryParams set.
struct RecoveryVars {
    TransformKind kind = TransformKind::G0;
    bool share_reference = true;
    std::map<FactorKey, FactorVars> targets;
    std::map<FactorKey, FactorVars> adapters;

    static RecoveryVars constants(const RecoveryParams& rp);
    static RecoveryVars parameters(const RecoveryParams& rp);

    std::vector<Var<float>> trainable() const;
    // Copies current factor values into a copy of `like`.
    RecoveryParams snapshot(const RecoveryParams& like) const;
};

// Target layers get g(Theta_j, factors) computed in the graph; stored layers with
// adapters get Theta + A B. Throws std::invalid_argument naming the first
// (layer, projection) of a scheduled target without factors.
model::MlpProvider recovery_provider(const model::ModelVars& base, const ReplacementSchedule& s,
                                     const RecoveryVars& rv);

// Target layers reuse their reference's MLP weights verbatim.
model::MlpProvider direct_provider(const model::ModelVars& base, const ReplacementSchedule& s);

// Target layers add nothing to the residual stream.
model::MlpProvider drop_provider(const ReplacementSchedule& s);

// A forward-capable model whose target MLP weights are computed, never stored.
class SharedModelView {
public:
    SharedModelView(model::ModelVars base, ReplacementSchedule schedule, model::MlpProvider provider,
                    std::size_t stored_parameters);

    const model::ModelVars& base() const { return base_; }
    const ReplacementSchedule& schedule() const { return schedule_; }
    const model::MlpProvider& provider() const { return provider_; }
    std::size_t stored_parameter_count() const { return stored_; }

    model::ForwardResult forward(std::span<const std::int32_t> tokens, std::size_t batch, std::size_t seq,
                                 std::span<const std::size_t> taps = {}) const;
    model::PerplexityResult perplexity(std::span<const std::int32_t> stream) const;

private:
    model::ModelVars base_;
    ReplacementSchedule schedule_;
    model::MlpProvider provider_;
    std::size_t stored_;
};

// full model parameters - 3 d1 d2 per target layer
std::size_t stored_base_parameters(const model::ModelConfig& c, const ReplacementSchedule& s);

SharedModelView materialize_view(const model::ModelVars& base, const ReplacementSchedule& s,
                                 const RecoveryParams& rp, TransformKind kind);
SharedModelView direct_view(const model::ModelVars& base, const ReplacementSchedule& s);
SharedModelView drop_view(const model::ModelVars& base, const ReplacementSchedule& s);

// Copy of base whose target MLP tensors hold the explicit transform outputs.
model::WeightStore materialize_explicit(const model::WeightStore& base, const RecoveryParams& rp);

}  // namespace sharp::sharing
