// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include "sharp/model/pretrain.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "sharp/data/batches.h"
#include "sharp/model/transformer.h"
#include "sharp/tensorkernel/optim.h"

namespace sharp::model {

PretrainResult pretrain(const ModelConfig& config, const data::Corpus& train, const PretrainConfig& pc) {
    ModelVars m = ModelVars::parameters(init_model(config));
    const std::vector<Var<float>> params = m.all();
    tk::Adam<float> opt(params, tk::AdamConfig{pc.lr});
    const auto warmup = static_cast<std::size_t>(std::ceil(pc.warmup_fraction * static_cast<double>(pc.steps)));

    PretrainResult res;
    std::uint64_t epoch = 0;
    std::vector<data::TokenBatch> epoch_batches;
    std::size_t cursor = 0;
    for (std::size_t step = 0; step < pc.steps; ++step) {
        if (cursor == epoch_batches.size()) {
            epoch_batches = data::batches(train, pc.batch_size, config.max_seq_len, pc.seed, epoch++);
            cursor = 0;
            if (epoch_batches.empty()) throw std::invalid_argument("pretrain: training split is empty");
        }
        const data::TokenBatch& b = epoch_batches[cursor++];
        const Var<float> loss = lm_loss(m, b.inputs, b.targets, b.mask, b.batch, b.seq);
        const double lv = loss.value().data[0];
        if (!std::isfinite(lv)) {
            throw std::runtime_error("pretrain: non-finite loss at step " + std::to_string(step));
        }
        res.losses.push_back(lv);
        tk::backward(loss);
        tk::clip_grad_norm<float>(params, pc.clip);

        double lr = pc.lr;
        if (step < warmup) {
            lr = pc.lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
        } else if (pc.steps > warmup) {
            const double t = static_cast<double>(step - warmup) / static_cast<double>(pc.steps - warmup);
            lr = pc.lr * (pc.final_lr_fraction + (1.0 - pc.final_lr_fraction) * 0.5 * (1.0 + std::cos(std::numbers::pi * t)));
        }
        opt.step(lr);
    }
    res.weights = m.snapshot();
    return res;
}

}  // namespace sharp::model
