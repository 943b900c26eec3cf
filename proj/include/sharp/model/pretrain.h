// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "sharp/data/corpus.h"
#include "sharp/model/weights.h"

namespace sharp::model {

struct PretrainConfig {
    double lr = 3e-3;
    double warmup_fraction = 0.05;
    double final_lr_fraction = 0.1;  // cosine decay floor
    double clip = 1.0;
    std::size_t steps = 1500;
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;
};

struct PretrainResult {
    WeightStore weights;
    std::vector<double> losses;
};

// Next-token training of every tensor from init_model(config) on the train split.
// Throws std::runtime_error naming the step if the loss becomes non-finite.
PretrainResult pretrain(const ModelConfig& config, const data::Corpus& train, const PretrainConfig& pc);

}  // namespace sharp::model
