// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0
//
// Single Layer Warmup: per target layer l, fit the recovery factors so that
// the predicted MLP block g(Theta_j, factors) reproduces the original block
// output f(X; Theta_l) on activations X captured from the unmodified model.

#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "sharp/data/corpus.h"
#include "sharp/model/weights.h"
#include "sharp/sharing/transform.h"

namespace sharp::recovery {

using sharing::FactorKey;
using sharing::ProjectionFactors;
using sharing::RecoveryParams;
using sharing::ReplacementSchedule;
using sharing::TransformKind;
using tk::Tensor;

struct ActivationCache {
    double fraction = 0.0;
    std::size_t sequences = 0;
    // Normalized MLP inputs per target layer, rows x d1.
    std::map<std::size_t, Tensor<float>> inputs;
};

// Runs the base model over ceil(q * n) sampled training sequences and records
// the MLP input of every scheduled target at every non-pad position.
ActivationCache capture_activations(const model::WeightStore& base, const ReplacementSchedule& s,
                                    const data::Corpus& train, double q, std::uint64_t seed,
                                    std::size_t batch_size = 16);

struct SlwConfig {
    double lr = 1e-3;
    std::size_t epochs = 5;
    std::size_t batch_size = 256;
    std::uint64_t seed = 0;
    double capture_fraction = 0.10;

    void validate() const;
};

struct SlwResult {
    std::size_t layer = 0;
    std::map<model::Role, ProjectionFactors> factors;
    std::vector<double> losses;  // per optimizer step
    double initial_loss = 0.0;  // full-cache block-output MSE before training
    double final_loss = 0.0;  // and after
};

// Block-output MSE of g(ref, factors) against target over all rows of x.
double block_mse(TransformKind kind, const model::LayerWeights& ref, const model::LayerWeights& target,
                 const std::map<model::Role, ProjectionFactors>& factors, const Tensor<float>& x);

// Adam on mean squared block-output error; rows are reshuffled every epoch by a
// stream derived from (config.seed, layer). Throws std::runtime_error naming the
// layer and step if the loss turns non-finite.
SlwResult slw_fit(const model::LayerWeights& ref, const model::LayerWeights& target, const Tensor<float>& x,
                  TransformKind kind, std::map<model::Role, ProjectionFactors> init, const SlwConfig& config,
                  std::size_t layer = 0);

struct SlwAllResult {
    RecoveryParams params;
    std::map<std::size_t, SlwResult> per_layer;
};

// Fits every target independently, fanning out up to `threads` workers (0 =
// hardware concurrency). Results do not depend on the thread count.
SlwAllResult slw_all(const model::WeightStore& base, const ActivationCache& cache, const RecoveryParams& init,
                     const SlwConfig& config, std::size_t threads = 0);

}  // namespace sharp::recovery
