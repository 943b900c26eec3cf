// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "sharp/data/corpus.h"
#include "sharp/model/checkpoint.h"
#include "sharp/model/digest.h"
#include "sharp/model/pretrain.h"
#include "sharp/model/transformer.h"

using namespace sharp;
using namespace sharp::model;
using tk::Buffer;
using tk::Tensor;
using tk::Var;

namespace {

ModelConfig small(std::uint64_t seed = 1) {
    ModelConfig c;
    c.n_layers = 4;
    c.d_model = 16;
    c.d_hidden = 40;
    c.n_heads = 2;
    c.max_seq_len = 16;
    c.seed = seed;
    return c;
}

std::vector<std::int32_t> some_tokens(std::size_t n, std::uint32_t salt = 0) {
    std::vector<std::int32_t> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<std::int32_t>((i * 37 + salt * 11 + 5) % 256);
    return t;
}

Var<float> cv(tk::Shape s, Buffer<float> d) { return Var<float>::constant(Tensor<float>(std::move(s), std::move(d))); }

}  // namespace

TEST_CASE("init_model is seeded") {
    CHECK(weights_digest(init_model(small(1))) == weights_digest(init_model(small(1))));
    CHECK(weights_digest(init_model(small(1))) != weights_digest(init_model(small(2))));
}

TEST_CASE("parameter count closed form") {
    ModelConfig c;
    c.vocab_size = 256;
    const std::size_t V = 256, T = 64, d1 = 64, d2 = 172, N = 12;
    const std::size_t expect = V * d1 + T * d1 + N * (4 * d1 * d1 + 3 * d1 * d2 + 2 * d1) + d1 + d1 * V;
    CHECK(parameter_count(c) == expect);
    CHECK(init_model(c).parameter_count() == expect);
}

TEST_CASE("config validation") {
    ModelConfig c = small();
    c.n_heads = 3;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = small();
    c.d_hidden = 8;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("mlp_forward hand trace and degenerate weights") {
    // d1 = 2, d2 = 3
    auto x = cv({1, 2}, {1.0f, -2.0f});
    auto gate = cv({2, 3}, {1, 0, 2, 0, 1, -1});
    auto up = cv({2, 3}, {1, 1, 0, 0, 1, 1});
    auto down = cv({3, 2}, {1, 0, 0, 1, 1, 1});
    // x gate = (1, -2, 4), x up = (1, -1, -2)
    auto silu = [](double v) { return v / (1.0 + std::exp(-v)); };
    const double h0 = silu(1) * 1, h1 = silu(-2) * -1, h2 = silu(4) * -2;
    auto y = mlp_forward(x, gate, up, down).value();
    CHECK(y.data[0] == doctest::Approx(h0 + h2).epsilon(1e-6));
    CHECK(y.data[1] == doctest::Approx(h1 + h2).epsilon(1e-6));

    auto zero = mlp_forward(x, gate, up, cv({3, 2}, Buffer<float>(6, 0.0f))).value();
    for (float v : zero.data) CHECK(v == 0.0f);

    auto xs = cv({1, 2}, {1.0f, 1.0f});
    auto saturated = mlp_forward(xs, cv({2, 3}, Buffer<float>(6, -60.0f)), up, down).value();
    for (float v : saturated.data) CHECK(std::fabs(v) < 1e-20);
}

TEST_CASE("forward shapes, taps and causality") {
    auto m = ModelVars::constants(init_model(small()));
    auto one = forward(m, some_tokens(1), 1, 1);
    CHECK(one.logits.shape() == tk::Shape{1, 257});

    const std::vector<std::size_t> taps{2, 3};
    auto toks = some_tokens(32);
    auto f = forward(m, toks, 2, 16, {}, taps);
    CHECK(f.logits.shape() == tk::Shape{32, 257});
    REQUIRE(f.taps.count(2));
    const auto& L = m.layers[1];
    auto replay = mlp_forward(Var<float>::constant(f.taps.at(2)), L.gate, L.up, L.down).value();
    CHECK(tk::bitwise_equal(replay, f.tap_outputs.at(2)));

    auto toks2 = toks;
    toks2[5] = (toks2[5] + 1) % 256;
    auto g = forward(m, toks2, 2, 16);
    const std::size_t V = 257;
    for (std::size_t p = 0; p < 16; ++p) {
        bool same = true;
        for (std::size_t v = 0; v < V; ++v) same &= f.logits.value().data[p * V + v] == g.logits.value().data[p * V + v];
        if (p < 5) CHECK(same);
        else if (p == 5) CHECK_FALSE(same);
    }
    // second sequence untouched
    for (std::size_t i = 16 * V; i < 32 * V; ++i) REQUIRE(f.logits.value().data[i] == g.logits.value().data[i]);
    CHECK_THROWS_AS(forward(m, some_tokens(34), 2, 17), std::invalid_argument);
}

TEST_CASE("perplexity of uniform logits equals the vocabulary") {
    ModelConfig c = small();
    c.vocab_size = 256;
    auto w = init_model(c);
    w.head.data.assign(w.head.data.size(), 0.0f);
    auto m = ModelVars::constants(w);
    auto r = perplexity(m, some_tokens(100));
    CHECK(r.perplexity == doctest::Approx(256.0).epsilon(1e-9));
    CHECK(r.tokens == 99);
    CHECK_THROWS(perplexity(m, some_tokens(1)));
}

TEST_CASE("training on a repeating token drives perplexity toward 1") {
    ModelConfig c = small();
    data::Corpus corpus;
    for (int i = 0; i < 8; ++i) corpus.sequences.push_back(data::Sequence(64, 65));
    PretrainConfig pc;
    pc.steps = 150;
    pc.batch_size = 4;
    pc.lr = 1e-2;
    auto r = pretrain(c, corpus, pc);
    auto ppl = perplexity(ModelVars::constants(r.weights), data::Sequence(200, 65)).perplexity;
    CHECK(ppl >= 1.0);
    CHECK(ppl < 1.05);
    CHECK(r.losses.back() < r.losses.front());
}

TEST_CASE("pretraining is bit-reproducible") {
    data::Corpus corpus = data::corpus_from_text("the cat sat on the mat\n\nthe dog sat on the log\n\na b c d e f g");
    PretrainConfig pc;
    pc.steps = 5;
    pc.batch_size = 2;
    auto a = pretrain(small(), corpus, pc);
    auto b = pretrain(small(), corpus, pc);
    CHECK(weights_digest(a.weights) == weights_digest(b.weights));
    CHECK(a.losses == b.losses);
}

TEST_CASE("checkpoint round trip and errors") {
    const auto dir = std::filesystem::temp_directory_path();
    auto w = init_model(small(7));
    save_checkpoint(w, dir / "sharp_rt.shrp");
    auto back = load_checkpoint(dir / "sharp_rt.shrp");
    auto a = w.named();
    auto b = back.named();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].first == b[i].first);
        CHECK(tk::bitwise_equal(*a[i].second, *b[i].second));
    }

    std::string bytes;
    {
        std::ifstream in(dir / "sharp_rt.shrp", std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(in), {});
    }
    auto write = [&](const std::string& name, const std::string& content) {
        std::ofstream(dir / name, std::ios::binary) << content;
        return dir / name;
    };
    auto expect_kind = [](const std::filesystem::path& p, CheckpointError::Kind k) {
        try {
            load_checkpoint(p);
            FAIL("no error");
        } catch (const CheckpointError& e) {
            CHECK(e.kind() == k);
        }
    };
    std::string bad = bytes;
    bad[0] = 'X';
    expect_kind(write("sharp_magic.shrp", bad), CheckpointError::Kind::BadMagic);
    std::string old = bytes;
    old[4] = 0;
    expect_kind(write("sharp_old.shrp", old), CheckpointError::Kind::VersionMismatch);
    expect_kind(write("sharp_short.shrp", bytes.substr(0, bytes.size() - 3)), CheckpointError::Kind::Truncated);
    expect_kind(write("sharp_long.shrp", bytes + "xy"), CheckpointError::Kind::Format);
    expect_kind(dir / "sharp_missing.shrp", CheckpointError::Kind::Io);
}

TEST_CASE("git blob hash") {
    CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}
