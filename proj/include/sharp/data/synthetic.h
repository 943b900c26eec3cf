// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

namespace sharp::data {

// Deterministic English-like text: paragraphs built from a fixed grammar over a
// small lexicon plus a table of invented facts that recur verbatim, separated by
// blank lines. Generates paragraphs until at least min_bytes are produced.
std::string synthetic_corpus(std::size_t min_bytes, std::uint64_t seed);

}  // namespace sharp::data
