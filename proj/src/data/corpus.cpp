// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include "sharp/data/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace sharp::data {

namespace {

bool blank(std::string_view line) {
    return std::all_of(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

std::vector<std::size_t> draw(std::size_t n, std::size_t k, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

std::size_t Corpus::token_count() const {
    std::size_t n = 0;
    for (const auto& s : sequences) n += s.size();
    return n;
}

Sequence tokenize(std::string_view bytes) {
    Sequence ids(bytes.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) ids[i] = static_cast<unsigned char>(bytes[i]);
    return ids;
}

std::string detokenize(const Sequence& ids) {
    std::string out(ids.size(), '\0');
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || ids[i] >= kByteVocab) {
            throw std::out_of_range("detokenize: id " + std::to_string(ids[i]) + " is not a byte");
        }
        out[i] = static_cast<char>(static_cast<unsigned char>(ids[i]));
    }
    return out;
}

std::vector<std::string> split_documents(std::string_view text) {
    std::vector<std::string> docs;
    std::string cur;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        const std::string_view line = text.substr(pos, nl - pos);
        if (blank(line)) {
            if (!cur.empty()) docs.push_back(std::move(cur));
            cur.clear();
        } else {
            if (!cur.empty()) cur += '\n';
            cur.append(line);
        }
        pos = nl + 1;
    }
    if (!cur.empty()) docs.push_back(std::move(cur));
    return docs;
}

Corpus corpus_from_text(std::string_view text, std::string source) {
    Corpus c;
    c.source = std::move(source);
    for (const auto& d : split_documents(text)) c.sequences.push_back(tokenize(d));
    return c;
}

Corpus load_and_tokenize(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("corpus file not found: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (text.empty()) throw std::runtime_error("corpus file is empty: " + path.string());
    Corpus c = corpus_from_text(text, path.string());
    if (c.sequences.empty()) throw std::runtime_error("corpus file holds no documents: " + path.string());
    return c;
}

std::pair<Corpus, Corpus> split(const Corpus& corpus, double eval_fraction, std::uint64_t seed) {
    if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) {
        throw std::invalid_argument("split: eval_fraction must lie in (0,1)");
    }
    const std::size_t n = corpus.sequences.size();
    const auto n_eval = static_cast<std::size_t>(std::floor(eval_fraction * static_cast<double>(n)));
    if (n_eval == 0) {
        throw std::invalid_argument("split: corpus of " + std::to_string(n) +
                                    " sequences is too small for one eval sequence");
    }
    const auto picked = draw(n, n_eval, seed);
    Corpus train, eval;
    train.source = eval.source = corpus.source;
    train.split_seed = eval.split_seed = seed;
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (k < picked.size() && picked[k] == i) {
            eval.sequences.push_back(corpus.sequences[i]);
            ++k;
        } else {
            train.sequences.push_back(corpus.sequences[i]);
        }
    }
    return {std::move(train), std::move(eval)};
}

Corpus sample_fraction(const Corpus& corpus, double q, std::uint64_t seed) {
    if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("sample_fraction: q must lie in (0,1]");
    const std::size_t n = corpus.sequences.size();
    const auto k = std::min(n, static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-9)));
    Corpus out;
    out.source = corpus.source;
    out.split_seed = corpus.split_seed;
    for (std::size_t i : draw(n, k, seed)) out.sequences.push_back(corpus.sequences[i]);
    return out;
}

Sequence token_stream(const Corpus& corpus) {
    Sequence s;
    s.reserve(corpus.token_count() + 2 * corpus.sequences.size());
    for (std::size_t i = 0; i < corpus.sequences.size(); ++i) {
        if (i) {
            s.push_back('\n');
            s.push_back('\n');
        }
        s.insert(s.end(), corpus.sequences[i].begin(), corpus.sequences[i].end());
    }
    return s;
}

}  // namespace sharp::data
