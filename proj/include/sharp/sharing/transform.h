// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0
//
// Candidate transformations predicting a target projection from its reference
// Theta (p x q) and rank-r recovery factors:
//   G0: alpha*Theta + A B
//   G1: alpha*Theta C^T D + A B          C, D: r x q
//   G2: alpha*E F^T Theta + A B          E, F: p x r
//   G3: alpha*((U V) (.) Theta) + A B    U: p x r, V: r x q
// with A: p x r, B: r x q and one trainable scalar alpha per projection.

#pragma once

#include <cstdint>
#include <map>
#include <string_view>
#include <utility>
#include <vector>

#include "sharp/model/weights.h"
#include "sharp/sharing/schedule.h"
#include "sharp/tensorkernel/autograd.h"

namespace sharp::sharing {

using model::Role;
using tk::Tensor;
using tk::Var;

enum class TransformKind { G0, G1, G2, G3 };

const char* transform_name(TransformKind k);
TransformKind transform_from_name(std::string_view name);

// Names of the kind-specific factor pair: C/D, E/F or U/V (empty for G0).
std::pair<const char*, const char*> extra_factor_names(TransformKind k);

// alpha is [1]; extra1/extra2 hold the kind-specific pair. Adapters (full-LoRA
// mode) use only a and b.
struct ProjectionFactors {
    Tensor<float> alpha, a, b, extra1, extra2;

    std::size_t parameter_count() const;
};

struct FactorVars {
    Var<float> alpha, a, b, extra1, extra2;

    static FactorVars constants(const ProjectionFactors& f);
    static FactorVars parameters(const ProjectionFactors& f);
    ProjectionFactors snapshot() const;
    std::vector<Var<float>> defined() const;
};

Var<float> apply_transform(TransformKind kind, const Var<float>& theta, const FactorVars& f);
Tensor<float> apply_transform(TransformKind kind, const Tensor<float>& theta, const ProjectionFactors& f);

// Shape (rows, cols) of a projection in a model with widths d1 < d2.
std::pair<std::size_t, std::size_t> projection_shape(Role role, std::size_t d1, std::size_t d2);

using FactorKey = std::pair<std::size_t, Role>;

struct RecoveryParams {
    TransformKind kind = TransformKind::G0;
    std::size_t rank = 0;
    ReplacementSchedule schedule;
    // false: targets are A B alone, the reference is ignored and alpha is not a
    // parameter (drop baseline given the same low-rank budget).
    bool share_reference = true;
    std::map<FactorKey, ProjectionFactors> targets;
    // Identity-initialized Theta + A B adapters on stored layers (full-LoRA mode).
    std::map<FactorKey, ProjectionFactors> adapters;

    std::size_t parameter_count() const;
};

// alpha = 1; A ~ N(0, 0.02), B = 0; extra factors ~ N(0, sigma) with sigma
// chosen so the multiplicative branch starts at Theta's scale: (q r)^-1/4 for
// G1, (p r)^-1/4 for G2, r^-1/4 for G3. Deterministic per (seed, layer, role).
RecoveryParams init_recovery(TransformKind kind, const ReplacementSchedule& schedule, std::size_t rank,
                             std::size_t d1, std::size_t d2, std::uint64_t seed);

// Drop-baseline parameterization: target = A B with A ~ N(0, 0.02) and B small
// random for gate/up, B = 0 for down, so every target MLP starts with zero output.
RecoveryParams init_reference_free(const ReplacementSchedule& schedule, std::size_t rank, std::size_t d1,
                                   std::size_t d2, std::uint64_t seed);

// Adds B = 0 adapters of the given rank to every non-target layer.
void attach_full_lora(RecoveryParams& rp, std::size_t rank, std::size_t d1, std::size_t d2, std::uint64_t seed);

}  // namespace sharp::sharing
