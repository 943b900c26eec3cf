// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "sharp/data/corpus.h"

namespace sharp::data {

// batch x seq next-token block: targets[i] follows inputs[i] in the stream.
// mask[i] == 0 marks positions whose target lies past the end of the stream.
struct TokenBatch {
    std::size_t batch = 0;
    std::size_t seq = 0;
    std::vector<std::int32_t> inputs;
    std::vector<std::int32_t> targets;
    std::vector<std::uint8_t> mask;

    std::size_t counted() const;
};

// Cuts a token stream of n tokens into ceil(n / seq_len) blocks of seq_len
// inputs. The last block is padded with kPadId and masked.
std::vector<TokenBatch> blocks(const Sequence& stream, std::size_t seq_len);

// One epoch of shuffled blocks grouped into batches. The order is a pure
// function of (seed, epoch); the final batch may hold fewer blocks.
std::vector<TokenBatch> batches(const Corpus& split, std::size_t batch_size, std::size_t seq_len,
                                std::uint64_t seed, std::uint64_t epoch = 0);

// Concatenates blocks (all with equal seq) into one batch.
TokenBatch stack(const std::vector<TokenBatch>& parts);

}  // namespace sharp::data
