// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include "sharp/model/weights.h"

#include <random>
#include <stdexcept>

#include "sharp/model/digest.h"

namespace sharp::model {

void ModelConfig::validate() const {
    auto bad = [](const std::string& m) { throw std::invalid_argument("invalid model config: " + m); };
    if (n_layers < 4) bad("n_layers must be at least 4");
    if (d_model == 0) bad("d_model must be positive");
    if (n_heads == 0 || d_model % n_heads != 0) bad("d_model must be divisible by n_heads");
    if (d_hidden <= d_model) bad("d_hidden must exceed d_model");
    if (vocab_size == 0) bad("vocab_size must be positive");
    if (max_seq_len == 0) bad("max_seq_len must be positive");
}

const char* role_name(Role r) {
    switch (r) {
        case Role::Gate: return "gate";
        case Role::Up: return "up";
        case Role::Down: return "down";
    }
    return "?";
}

Role role_from_name(const std::string& name) {
    if (name == "gate") return Role::Gate;
    if (name == "up") return Role::Up;
    if (name == "down") return Role::Down;
    throw std::invalid_argument("unknown projection role: " + name);
}

Tensor<float>& LayerWeights::mlp(Role r) {
    switch (r) {
        case Role::Gate: return gate;
        case Role::Up: return up;
        case Role::Down: return down;
    }
    throw std::logic_error("bad role");
}

const Tensor<float>& LayerWeights::mlp(Role r) const { return const_cast<LayerWeights*>(this)->mlp(r); }

LayerWeights& WeightStore::layer(std::size_t l) {
    if (l < 1 || l > layers.size()) {
        throw std::out_of_range("layer " + std::to_string(l) + " outside [1," + std::to_string(layers.size()) + "]");
    }
    return layers[l - 1];
}

const LayerWeights& WeightStore::layer(std::size_t l) const { return const_cast<WeightStore*>(this)->layer(l); }

std::vector<std::pair<std::string, Tensor<float>*>> WeightStore::named_mutable() {
    std::vector<std::pair<std::string, Tensor<float>*>> out;
    out.emplace_back("tok_emb", &tok_emb);
    out.emplace_back("pos_emb", &pos_emb);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string p = "layers." + std::to_string(i + 1) + ".";
        LayerWeights& L = layers[i];
        out.emplace_back(p + "attn_norm", &L.attn_norm);
        out.emplace_back(p + "attn.wq", &L.wq);
        out.emplace_back(p + "attn.wk", &L.wk);
        out.emplace_back(p + "attn.wv", &L.wv);
        out.emplace_back(p + "attn.wo", &L.wo);
        out.emplace_back(p + "mlp_norm", &L.mlp_norm);
        out.emplace_back(p + "mlp.gate", &L.gate);
        out.emplace_back(p + "mlp.up", &L.up);
        out.emplace_back(p + "mlp.down", &L.down);
    }
    out.emplace_back("final_norm", &final_norm);
    out.emplace_back("head", &head);
    return out;
}

std::vector<std::pair<std::string, const Tensor<float>*>> WeightStore::named() const {
    std::vector<std::pair<std::string, const Tensor<float>*>> out;
    for (auto& [n, t] : const_cast<WeightStore*>(this)->named_mutable()) out.emplace_back(n, t);
    return out;
}

std::size_t WeightStore::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : named()) n += t->size();
    return n;
}

std::size_t parameter_count(const ModelConfig& c) {
    const std::size_t d1 = c.d_model, d2 = c.d_hidden;
    return c.vocab_size * d1 + c.max_seq_len * d1 + c.n_layers * (4 * d1 * d1 + 3 * d1 * d2 + 2 * d1) + d1 +
           d1 * c.vocab_size;
}

WeightStore init_model(const ModelConfig& config) {
    config.validate();
    const std::size_t d1 = config.d_model, d2 = config.d_hidden;
    WeightStore w;
    w.config = config;
    w.tok_emb = Tensor<float>::zeros({config.vocab_size, d1});
    w.pos_emb = Tensor<float>::zeros({config.max_seq_len, d1});
    w.layers.resize(config.n_layers);
    for (auto& L : w.layers) {
        L.attn_norm = Tensor<float>::full({d1}, 1.0f);
        L.mlp_norm = Tensor<float>::full({d1}, 1.0f);
        L.wq = L.wk = L.wv = L.wo = Tensor<float>::zeros({d1, d1});
        L.gate = L.up = Tensor<float>::zeros({d1, d2});
        L.down = Tensor<float>::zeros({d2, d1});
    }
    w.final_norm = Tensor<float>::full({d1}, 1.0f);
    w.head = Tensor<float>::zeros({d1, config.vocab_size});

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<float> nd(0.0f, 0.02f);
    for (auto& [name, t] : w.named_mutable()) {
        if (name.ends_with("norm")) continue;
        for (float& v : t->data) v = nd(rng);
    }
    return w;
}

std::string weights_digest(const WeightStore& w) {
    std::string buf;
    for (const auto& [name, t] : w.named()) {
        buf += name;
        buf.append(reinterpret_cast<const char*>(t->data.data()), t->data.size() * sizeof(float));
    }
    return sha1_hex(buf);
}

}  // namespace sharp::model
