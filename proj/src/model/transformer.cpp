// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include "sharp/model/transformer.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sharp/tensorkernel/ops.h"

namespace sharp::model {

using namespace sharp::tk;

namespace {

template <class Make>
ModelVars wrap(const WeightStore& w, Make make) {
    ModelVars m;
    m.config = w.config;
    m.tok_emb = make(w.tok_emb);
    m.pos_emb = make(w.pos_emb);
    for (const auto& L : w.layers) {
        m.layers.push_back({make(L.attn_norm), make(L.wq), make(L.wk), make(L.wv), make(L.wo), make(L.mlp_norm),
                            make(L.gate), make(L.up), make(L.down)});
    }
    m.final_norm = make(w.final_norm);
    m.head = make(w.head);
    return m;
}

}  // namespace

ModelVars ModelVars::constants(const WeightStore& w) {
    return wrap(w, [](const Tensor<float>& t) { return Var<float>::constant(t); });
}

ModelVars ModelVars::parameters(const WeightStore& w) {
    return wrap(w, [](const Tensor<float>& t) { return Var<float>::parameter(t); });
}

std::vector<Var<float>> ModelVars::all() const {
    std::vector<Var<float>> out{tok_emb, pos_emb};
    for (const auto& L : layers) {
        for (const auto* v : {&L.attn_norm, &L.wq, &L.wk, &L.wv, &L.wo, &L.mlp_norm, &L.gate, &L.up, &L.down}) {
            out.push_back(*v);
        }
    }
    out.push_back(final_norm);
    out.push_back(head);
    return out;
}

WeightStore ModelVars::snapshot() const {
    auto val = [](const Var<float>& v) {
        Tensor<float> t = v.value();
        t.requires_grad = false;
        return t;
    };
    WeightStore w;
    w.config = config;
    w.tok_emb = val(tok_emb);
    w.pos_emb = val(pos_emb);
    for (const auto& L : layers) {
        w.layers.push_back({val(L.attn_norm), val(L.wq), val(L.wk), val(L.wv), val(L.wo), val(L.mlp_norm),
                            val(L.gate), val(L.up), val(L.down)});
    }
    w.final_norm = val(final_norm);
    w.head = val(head);
    return w;
}

Var<float> mlp_forward(const Var<float>& x, const Var<float>& gate, const Var<float>& up, const Var<float>& down) {
    if (gate.shape() != up.shape() || gate.shape().size() != 2 || down.shape().size() != 2 ||
        down.shape()[0] != gate.shape()[1] || down.shape()[1] != gate.shape()[0]) {
        throw ShapeError("mlp_forward: inconsistent projections gate " + shape_string(gate.shape()) + ", up " +
                         shape_string(up.shape()) + ", down " + shape_string(down.shape()));
    }
    return matmul(mul(silu(matmul(x, gate)), matmul(x, up)), down);
}

ForwardResult forward(const ModelVars& m, std::span<const std::int32_t> tokens, std::size_t batch, std::size_t seq,
                      const MlpProvider& provider, std::span<const std::size_t> taps) {
    const ModelConfig& c = m.config;
    if (seq == 0 || seq > c.max_seq_len) {
        throw std::invalid_argument("forward: sequence length " + std::to_string(seq) + " outside [1," +
                                    std::to_string(c.max_seq_len) + "]");
    }
    if (tokens.size() != batch * seq) {
        throw std::invalid_argument("forward: " + std::to_string(tokens.size()) + " tokens for batch " +
                                    std::to_string(batch) + " x seq " + std::to_string(seq));
    }
    std::vector<std::int32_t> pos(batch * seq);
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<std::int32_t>(i % seq);

    ForwardResult res;
    Var<float> x = add(embedding(m.tok_emb, tokens), embedding(m.pos_emb, std::span<const std::int32_t>(pos)));
    for (std::size_t l = 1; l <= m.layers.size(); ++l) {
        const LayerVars& L = m.layers[l - 1];
        const Var<float> a = rmsnorm(x, L.attn_norm);
        const Var<float> att = causal_attention(matmul(a, L.wq), matmul(a, L.wk), matmul(a, L.wv), batch, seq,
                                                c.n_heads);
        x = add(x, matmul(att, L.wo));

        const Var<float> u = rmsnorm(x, L.mlp_norm);
        const bool tapped = std::find(taps.begin(), taps.end(), l) != taps.end();
        if (tapped) res.taps[l] = u.value();
        std::optional<MlpWeights> repl = provider ? provider(l) : std::nullopt;
        if (repl && repl->dropped) {
            if (tapped) res.tap_outputs[l] = Tensor<float>::zeros(u.shape());
            continue;
        }
        const Var<float> out = repl ? mlp_forward(u, repl->gate, repl->up, repl->down)
                                    : mlp_forward(u, L.gate, L.up, L.down);
        if (tapped) res.tap_outputs[l] = out.value();
        x = add(x, out);
    }
    res.logits = matmul(rmsnorm(x, m.final_norm), m.head);
    return res;
}

Var<float> lm_loss(const ModelVars& m, std::span<const std::int32_t> inputs, std::span<const std::int32_t> targets,
                   std::span<const std::uint8_t> mask, std::size_t batch, std::size_t seq,
                   const MlpProvider& provider) {
    const ForwardResult f = forward(m, inputs, batch, seq, provider);
    return cross_entropy_mean(f.logits, targets, mask);
}

PerplexityResult perplexity(const ModelVars& m, std::span<const std::int32_t> stream, const MlpProvider& provider,
                            std::size_t windows_per_batch) {
    if (stream.size() < 2) throw std::invalid_argument("perplexity: evaluation stream needs at least two tokens");
    if (windows_per_batch == 0) windows_per_batch = 1;
    const std::size_t L = m.config.max_seq_len;
    const std::size_t n = stream.size();
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s + 1 < n; s += L) starts.push_back(s);

    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t w0 = 0; w0 < starts.size(); w0 += windows_per_batch) {
        const std::size_t nb = std::min(windows_per_batch, starts.size() - w0);
        // Batches of one short window shrink seq to avoid padding.
        const std::size_t seq = nb == 1 ? std::min(L, n - 1 - starts[w0]) : L;
        std::vector<std::int32_t> in(nb * seq, 0), tg(nb * seq, 0);
        std::vector<std::uint8_t> mask(nb * seq, 0);
        std::size_t counted = 0;
        for (std::size_t b = 0; b < nb; ++b) {
            const std::size_t s = starts[w0 + b];
            const std::size_t len = std::min(seq, n - 1 - s);
            for (std::size_t i = 0; i < len; ++i) {
                in[b * seq + i] = stream[s + i];
                tg[b * seq + i] = stream[s + i + 1];
                mask[b * seq + i] = 1;
            }
            counted += len;
        }
        const ForwardResult f = forward(m, in, nb, seq, provider);
        const Var<double> logits = Var<double>::constant(f.logits.value().cast<double>());
        total += cross_entropy_mean(logits, tg, mask).value().data[0] * static_cast<double>(counted);
        count += counted;
    }
    PerplexityResult r;
    r.tokens = count;
    r.mean_nll = total / static_cast<double>(count);
    r.perplexity = std::exp(r.mean_nll);
    return r;
}

}  // namespace sharp::model
