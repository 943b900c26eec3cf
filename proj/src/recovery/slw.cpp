// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include "sharp/recovery/slw.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "sharp/data/batches.h"
#include "sharp/model/transformer.h"
#include "sharp/tensorkernel/ops.h"
#include "sharp/tensorkernel/optim.h"

namespace sharp::recovery {

using model::Role;
using sharing::FactorVars;
using tk::Var;

namespace {

constexpr std::size_t kChunkRows = 4096;

Tensor<float> rows_of(const Tensor<float>& x, std::size_t begin, std::size_t end) {
    const std::size_t d = x.shape[1];
    return Tensor<float>({end - begin, d}, tk::Buffer<float>(x.data.begin() + static_cast<std::ptrdiff_t>(begin * d),
                                                              x.data.begin() + static_cast<std::ptrdiff_t>(end * d)));
}

Tensor<float> gather(const Tensor<float>& x, std::span<const std::size_t> idx) {
    const std::size_t d = x.shape[1];
    Tensor<float> out = Tensor<float>::zeros({idx.size(), d});
    for (std::size_t i = 0; i < idx.size(); ++i) {
        std::copy_n(x.data.begin() + static_cast<std::ptrdiff_t>(idx[i] * d), d,
                    out.data.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
    return out;
}

struct Block {
    Var<float> gate, up, down;
};

Block own_block(const model::LayerWeights& w) {
    return {Var<float>::constant(w.gate), Var<float>::constant(w.up), Var<float>::constant(w.down)};
}

Block predicted_block(TransformKind kind, const Block& ref, const std::map<Role, FactorVars>& f) {
    return {sharing::apply_transform(kind, ref.gate, f.at(Role::Gate)),
            sharing::apply_transform(kind, ref.up, f.at(Role::Up)),
            sharing::apply_transform(kind, ref.down, f.at(Role::Down))};
}

Tensor<float> block_output(const Block& b, const Tensor<float>& x) {
    Tensor<float> out = Tensor<float>::zeros({x.shape[0], x.shape[1]});
    for (std::size_t r = 0; r < x.shape[0]; r += kChunkRows) {
        const std::size_t e = std::min(x.shape[0], r + kChunkRows);
        const auto y = model::mlp_forward(Var<float>::constant(rows_of(x, r, e)), b.gate, b.up, b.down);
        std::copy(y.value().data.begin(), y.value().data.end(),
                  out.data.begin() + static_cast<std::ptrdiff_t>(r * x.shape[1]));
    }
    return out;
}

double mse_of(const Tensor<float>& a, const Tensor<float>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(a.data.size());
}

std::map<Role, FactorVars> constants(const std::map<Role, ProjectionFactors>& f) {
    std::map<Role, FactorVars> out;
    for (const auto& [r, pf] : f) out.emplace(r, FactorVars::constants(pf));
    return out;
}

}  // namespace

ActivationCache capture_activations(const model::WeightStore& base, const ReplacementSchedule& s,
                                    const data::Corpus& train, double q, std::uint64_t seed, std::size_t batch_size) {
    if (train.sequences.empty()) throw std::invalid_argument("capture_activations: corpus is empty");
    if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("capture_activations: fraction must lie in (0,1]");
    const data::Corpus sample = data::sample_fraction(train, q, seed);
    const auto targets = s.targets();
    const std::size_t d1 = base.config.d_model;
    const model::ModelVars m = model::ModelVars::constants(base);
    const auto bl = data::blocks(data::token_stream(sample), base.config.max_seq_len);

    std::map<std::size_t, tk::Buffer<float>> rows;
    for (std::size_t i = 0; i < bl.size(); i += batch_size) {
        std::vector<data::TokenBatch> group(bl.begin() + static_cast<std::ptrdiff_t>(i),
                                            bl.begin() + static_cast<std::ptrdiff_t>(std::min(bl.size(), i + batch_size)));
        const data::TokenBatch b = data::stack(group);
        const auto f = model::forward(m, b.inputs, b.batch, b.seq, {}, targets);
        for (const auto& [l, t] : f.taps) {
            auto& dst = rows[l];
            for (std::size_t p = 0; p < b.inputs.size(); ++p) {
                if (b.inputs[p] == data::kPadId) continue;
                dst.insert(dst.end(), t.data.begin() + static_cast<std::ptrdiff_t>(p * d1),
                           t.data.begin() + static_cast<std::ptrdiff_t>((p + 1) * d1));
            }
        }
    }
    ActivationCache cache;
    cache.fraction = q;
    cache.sequences = sample.sequences.size();
    for (std::size_t l : targets) {
        auto& v = rows[l];
        const std::size_t n = v.size() / d1;
        cache.inputs.emplace(l, Tensor<float>({n, d1}, std::move(v)));
    }
    return cache;
}

void SlwConfig::validate() const {
    if (!(lr > 0.0)) throw std::invalid_argument("SLW lr must be positive");
    if (epochs < 1) throw std::invalid_argument("SLW epochs must be at least 1");
    if (batch_size < 1) throw std::invalid_argument("SLW batch size must be at least 1");
    if (!(capture_fraction > 0.0 && capture_fraction <= 1.0)) {
        throw std::invalid_argument("SLW capture fraction must lie in (0,1]");
    }
}

double block_mse(TransformKind kind, const model::LayerWeights& ref, const model::LayerWeights& target,
                 const std::map<Role, ProjectionFactors>& factors, const Tensor<float>& x) {
    const Block pred = predicted_block(kind, own_block(ref), constants(factors));
    return mse_of(block_output(pred, x), block_output(own_block(target), x));
}

SlwResult slw_fit(const model::LayerWeights& ref, const model::LayerWeights& target, const Tensor<float>& x,
                  TransformKind kind, std::map<Role, ProjectionFactors> init, const SlwConfig& config,
                  std::size_t layer) {
    config.validate();
    if (x.shape.size() != 2 || x.shape[0] == 0) {
        throw std::invalid_argument("slw_fit: empty activation cache for layer " + std::to_string(layer));
    }
    const std::size_t n = x.shape[0];
    const Tensor<float> y = block_output(own_block(target), x);
    const Block refb = own_block(ref);

    SlwResult res;
    res.layer = layer;
    res.initial_loss = mse_of(block_output(predicted_block(kind, refb, constants(init)), x), y);

    std::map<Role, FactorVars> fv;
    std::vector<Var<float>> params;
    for (const auto& [r, pf] : init) {
        fv.emplace(r, FactorVars::parameters(pf));
        for (auto& v : fv.at(r).defined()) params.push_back(v);
    }
    tk::Adam<float> opt(params, tk::AdamConfig{config.lr});
    std::vector<std::size_t> order(n);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        std::seed_seq ss{config.seed, static_cast<std::uint64_t>(layer), static_cast<std::uint64_t>(epoch)};
        std::mt19937_64 rng(ss);
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t b = 0; b < n; b += config.batch_size) {
            const std::span<const std::size_t> idx(order.data() + b, std::min(config.batch_size, n - b));
            const Var<float> xb = Var<float>::constant(gather(x, idx));
            const Var<float> yb = Var<float>::constant(gather(y, idx));
            const Block pred = predicted_block(kind, refb, fv);
            const Var<float> loss = tk::mse(model::mlp_forward(xb, pred.gate, pred.up, pred.down), yb);
            const double lv = loss.value().data[0];
            if (!std::isfinite(lv)) {
                throw std::runtime_error("SLW diverged for layer " + std::to_string(layer) + " at step " +
                                         std::to_string(res.losses.size()));
            }
            res.losses.push_back(lv);
            tk::backward(loss);
            opt.step();
        }
    }
    for (const auto& [r, v] : fv) res.factors.emplace(r, v.snapshot());
    res.final_loss = mse_of(block_output(predicted_block(kind, refb, constants(res.factors)), x), y);
    return res;
}

SlwAllResult slw_all(const model::WeightStore& base, const ActivationCache& cache, const RecoveryParams& init,
                     const SlwConfig& config, std::size_t threads) {
    config.validate();
    if (!init.share_reference) throw std::invalid_argument("slw_all: reference-free parameters have nothing to warm up");
    const auto targets = init.schedule.targets();
    for (std::size_t l : targets) {
        if (!cache.inputs.count(l)) {
            throw std::invalid_argument("slw_all: no cached activations for target layer " + std::to_string(l));
        }
    }
    std::vector<SlwResult> results(targets.size());
    std::vector<std::exception_ptr> errors(targets.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < targets.size(); i = next++) {
            const std::size_t l = targets[i];
            try {
                std::map<Role, ProjectionFactors> f;
                for (Role r : model::kMlpRoles) f.emplace(r, init.targets.at({l, r}));
                results[i] = slw_fit(base.layer(*init.schedule.reference_of(l)), base.layer(l), cache.inputs.at(l),
                                     init.kind, std::move(f), config, l);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, targets.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
            throw std::runtime_error("SLW failed for target layer " + std::to_string(targets[i]) + ": " + e.what());
        }
    }
    SlwAllResult out;
    out.params = init;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        for (auto& [r, f] : results[i].factors) out.params.targets[{targets[i], r}] = f;
        out.per_layer.emplace(targets[i], std::move(results[i]));
    }
    return out;
}

}  // namespace sharp::recovery
