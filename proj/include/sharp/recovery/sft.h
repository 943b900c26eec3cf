// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0
//
// Supervised fine-tuning of recovery factors by next-token loss through the
// shared model, base weights frozen.

#pragma once

#include <cstdint>
#include <vector>

#include "sharp/data/corpus.h"
#include "sharp/model/weights.h"
#include "sharp/sharing/transform.h"

namespace sharp::recovery {

struct SftConfig {
    double lr = 1e-3;
    double warmup_fraction = 0.05;
    std::size_t epochs = 1;
    std::size_t batch_size = 16;
    std::size_t max_seq_len = 64;
    std::uint64_t seed = 0;
    bool full_lora = false;
    std::size_t full_lora_rank = 0;  // 0: same as the recovery rank
    double data_fraction = 1.0;  // share of training sequences used
    std::size_t max_steps = 300;  // 0: no cap
    double clip = 1.0;

    void validate() const;
};

struct SftResult {
    sharing::RecoveryParams params;
    std::vector<double> losses;
};

// Linear warmup over warmup_fraction of the steps, then constant lr. Throws
// std::runtime_error with the step index if the loss turns non-finite.
SftResult sft(const model::WeightStore& base, const sharing::RecoveryParams& init, const data::Corpus& train,
              const SftConfig& config);

}  // namespace sharp::recovery
