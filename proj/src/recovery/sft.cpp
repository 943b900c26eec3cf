// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include "sharp/recovery/sft.h"

#include <cmath>
#include <stdexcept>

#include "sharp/data/batches.h"
#include "sharp/model/transformer.h"
#include "sharp/sharing/view.h"
#include "sharp/tensorkernel/optim.h"

namespace sharp::recovery {

void SftConfig::validate() const {
    if (!(lr > 0.0)) throw std::invalid_argument("SFT lr must be positive");
    if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
        throw std::invalid_argument("SFT warmup fraction must lie in [0,1)");
    }
    if (batch_size < 1) throw std::invalid_argument("SFT batch size must be at least 1");
    if (max_seq_len < 1) throw std::invalid_argument("SFT max_seq_len must be at least 1");
    if (!(data_fraction > 0.0 && data_fraction <= 1.0)) {
        throw std::invalid_argument("SFT data fraction must lie in (0,1]");
    }
    if (!(clip > 0.0)) throw std::invalid_argument("SFT clip norm must be positive");
}

SftResult sft(const model::WeightStore& base, const sharing::RecoveryParams& init, const data::Corpus& train,
              const SftConfig& config) {
    config.validate();
    if (config.max_seq_len > base.config.max_seq_len) {
        throw std::invalid_argument("SFT max_seq_len exceeds the model's");
    }
    sharing::RecoveryParams start = init;
    if (config.full_lora && start.adapters.empty()) {
        sharing::attach_full_lora(start, config.full_lora_rank ? config.full_lora_rank : start.rank,
                                  base.config.d_model, base.config.d_hidden, config.seed);
    }
    const model::ModelVars m = model::ModelVars::constants(base);
    const sharing::RecoveryVars rv = sharing::RecoveryVars::parameters(start);
    const model::MlpProvider provider = sharing::recovery_provider(m, start.schedule, rv);
    const std::vector<tk::Var<float>> params = rv.trainable();

    const data::Corpus used = config.data_fraction < 1.0 ? data::sample_fraction(train, config.data_fraction, config.seed)
                                                          : train;
    std::vector<std::vector<data::TokenBatch>> epochs;
    std::size_t total = 0;
    for (std::size_t e = 0; e < config.epochs; ++e) {
        epochs.push_back(data::batches(used, config.batch_size, config.max_seq_len, config.seed, e));
        total += epochs.back().size();
    }
    if (config.max_steps) total = std::min(total, config.max_steps);
    const auto warmup = static_cast<std::size_t>(std::ceil(config.warmup_fraction * static_cast<double>(total)));

    SftResult res;
    if (total == 0 || params.empty()) {
        res.params = start;
        return res;
    }
    tk::Adam<float> opt(params, tk::AdamConfig{config.lr});
    std::size_t step = 0;
    for (const auto& ep : epochs) {
        for (const auto& b : ep) {
            if (step == total) break;
            const auto loss = model::lm_loss(m, b.inputs, b.targets, b.mask, b.batch, b.seq, provider);
            const double lv = loss.value().data[0];
            if (!std::isfinite(lv)) {
                throw std::runtime_error("SFT loss became non-finite at step " + std::to_string(step));
            }
            res.losses.push_back(lv);
            tk::backward(loss);
            tk::clip_grad_norm<float>(params, config.clip);
            const double lr = step < warmup ? config.lr * static_cast<double>(step + 1) / static_cast<double>(warmup)
                                            : config.lr;
            opt.step(lr);
            ++step;
        }
    }
    res.params = rv.snapshot(start);
    return res;
}

}  // namespace sharp::recovery
