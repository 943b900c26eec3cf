// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0
//
// Byte-level corpora. Token ids 0..255 are raw bytes; kPadId fills the tail of
// the last ragged block and never contributes to a loss.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sharp::data {

inline constexpr std::int32_t kByteVocab = 256;
inline constexpr std::int32_t kPadId = 256;
inline constexpr std::int32_t kVocabWithPad = 257;

using Sequence = std::vector<std::int32_t>;

struct Corpus {
    std::vector<Sequence> sequences;
    std::string source;
    std::uint64_t split_seed = 0;

    std::size_t token_count() const;
};

Sequence tokenize(std::string_view bytes);
std::string detokenize(const Sequence& ids);

// Splits text into documents at blank lines (lines holding only whitespace).
// Empty documents are dropped.
std::vector<std::string> split_documents(std::string_view text);

Corpus corpus_from_text(std::string_view text, std::string source = "<memory>");

// Throws std::runtime_error for a missing or empty file.
Corpus load_and_tokenize(const std::filesystem::path& path);

// Sequence-level split; eval gets floor(eval_fraction * n) sequences drawn
// without replacement, train keeps the rest in their original order.
std::pair<Corpus, Corpus> split(const Corpus& corpus, double eval_fraction, std::uint64_t seed);

// ceil(q * n) sequences drawn without replacement, kept in corpus order.
Corpus sample_fraction(const Corpus& corpus, double q, std::uint64_t seed);

// All sequences joined with a blank line, the way documents sit in a file.
Sequence token_stream(const Corpus& corpus);

}  // namespace sharp::data
