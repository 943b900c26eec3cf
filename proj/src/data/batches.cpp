// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include "sharp/data/batches.h"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

namespace sharp::data {

std::size_t TokenBatch::counted() const {
    return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }));
}

std::vector<TokenBatch> blocks(const Sequence& stream, std::size_t seq_len) {
    if (seq_len == 0) throw std::invalid_argument("blocks: seq_len must be positive");
    const std::size_t n = stream.size();
    const std::size_t count = (n + seq_len - 1) / seq_len;
    std::vector<TokenBatch> out;
    out.reserve(count);
    for (std::size_t b = 0; b < count; ++b) {
        TokenBatch t;
        t.batch = 1;
        t.seq = seq_len;
        t.inputs.assign(seq_len, kPadId);
        t.targets.assign(seq_len, kPadId);
        t.mask.assign(seq_len, 0);
        for (std::size_t i = 0; i < seq_len; ++i) {
            const std::size_t p = b * seq_len + i;
            if (p < n) t.inputs[i] = stream[p];
            if (p + 1 < n) {
                t.targets[i] = stream[p + 1];
                t.mask[i] = 1;
            }
        }
        out.push_back(std::move(t));
    }
    return out;
}

TokenBatch stack(const std::vector<TokenBatch>& parts) {
    TokenBatch out;
    if (parts.empty()) return out;
    out.seq = parts.front().seq;
    for (const auto& p : parts) {
        if (p.seq != out.seq) throw std::invalid_argument("stack: blocks differ in seq length");
        out.batch += p.batch;
        out.inputs.insert(out.inputs.end(), p.inputs.begin(), p.inputs.end());
        out.targets.insert(out.targets.end(), p.targets.begin(), p.targets.end());
        out.mask.insert(out.mask.end(), p.mask.begin(), p.mask.end());
    }
    return out;
}

std::vector<TokenBatch> batches(const Corpus& split, std::size_t batch_size, std::size_t seq_len,
                                std::uint64_t seed, std::uint64_t epoch) {
    if (batch_size == 0) throw std::invalid_argument("batches: batch_size must be positive");
    auto bl = blocks(token_stream(split), seq_len);
    std::vector<std::size_t> order(bl.size());
    std::iota(order.begin(), order.end(), 0);
    std::seed_seq ss{seed, epoch};
    std::mt19937_64 rng(ss);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<TokenBatch> out;
    for (std::size_t i = 0; i < order.size(); i += batch_size) {
        std::vector<TokenBatch> group;
        for (std::size_t j = i; j < std::min(order.size(), i + batch_size); ++j) group.push_back(bl[order[j]]);
        out.push_back(stack(group));
    }
    return out;
}

}  // namespace sharp::data
