// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include "sharp/latency/latency.h"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace sharp::latency {

using sharing::TransformKind;

ModelDescription ModelDescription::llama2_7b() {
    return {"llama2-7b", 32, 4096, 11008, 32000, 0};
}

ModelDescription ModelDescription::from_config(const model::ModelConfig& c) {
    return {"toy", c.n_layers, c.d_model, c.d_hidden, c.vocab_size, c.max_seq_len};
}

std::size_t ModelDescription::total_parameters() const {
    const std::size_t per_layer = 4 * d_model * d_model + mlp_parameters_per_layer() + 2 * d_model;
    return 2 * vocab_size * d_model + position_embeddings * d_model + n_layers * per_layer + d_model;
}

void CostModel::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) throw std::invalid_argument(std::string("cost model: ") + name + " must be positive");
    };
    positive(bytes_per_param, "bytes_per_param");
    positive(load_bandwidth, "load_bandwidth");
    positive(compute_rate, "compute_rate");
    positive(lora_reconstruct_rate, "lora_reconstruct_rate");
    if (!(per_layer_init_overhead >= 0.0)) throw std::invalid_argument("cost model: per_layer_init_overhead < 0");
    if (!(overhead_bytes_per_layer >= 0.0)) throw std::invalid_argument("cost model: overhead_bytes_per_layer < 0");
}

CostModel CostModel::calibrate(const ModelDescription& d, double bytes_per_param, double per_layer_init_overhead,
                               double load_init_seconds, double forward_seconds, double size_bytes) {
    const double n = static_cast<double>(d.n_layers);
    const double params = static_cast<double>(d.total_parameters());
    CostModel cm;
    cm.bytes_per_param = bytes_per_param;
    cm.per_layer_init_overhead = per_layer_init_overhead;
    cm.overhead_bytes_per_layer = (size_bytes - bytes_per_param * params) / n;
    const double load_seconds = load_init_seconds - n * per_layer_init_overhead;
    if (!(load_seconds > 0.0)) throw std::invalid_argument("calibrate: init overhead exceeds load time");
    cm.load_bandwidth = size_bytes / load_seconds;
    cm.compute_rate = params / forward_seconds;
    cm.lora_reconstruct_rate = cm.compute_rate;
    cm.validate();
    return cm;
}

CostModel CostModel::mobile_llama2_7b() {
    return calibrate(ModelDescription::llama2_7b(), 0.5, 0.05, 9.794, 2.905, 4.04e9);
}

nlohmann::json CostModel::to_json() const {
    return {{"bytes_per_param", bytes_per_param},
            {"load_bandwidth", load_bandwidth},
            {"per_layer_init_overhead", per_layer_init_overhead},
            {"compute_rate", compute_rate},
            {"lora_reconstruct_rate", lora_reconstruct_rate},
            {"overhead_bytes_per_layer", overhead_bytes_per_layer}};
}

CostModel CostModel::from_json(const nlohmann::json& j) {
    CostModel cm;
    cm.bytes_per_param = j.value("bytes_per_param", cm.bytes_per_param);
    cm.load_bandwidth = j.value("load_bandwidth", cm.load_bandwidth);
    cm.per_layer_init_overhead = j.value("per_layer_init_overhead", cm.per_layer_init_overhead);
    cm.compute_rate = j.value("compute_rate", cm.compute_rate);
    cm.lora_reconstruct_rate = j.value("lora_reconstruct_rate", cm.lora_reconstruct_rate);
    cm.overhead_bytes_per_layer = j.value("overhead_bytes_per_layer", cm.overhead_bytes_per_layer);
    cm.validate();
    return cm;
}

std::size_t recovery_parameters_per_layer(TransformKind kind, std::size_t r, std::size_t d1, std::size_t d2) {
    if (r == 0) return 0;
    std::size_t n = 0;
    for (model::Role role : model::kMlpRoles) {
        const auto [p, q] = sharing::projection_shape(role, d1, d2);
        n += 1 + r * (p + q);
        switch (kind) {
            case TransformKind::G0: break;
            case TransformKind::G1: n += 2 * r * q; break;
            case TransformKind::G2: n += 2 * r * p; break;
            case TransformKind::G3: n += r * (p + q); break;
        }
    }
    return n;
}

std::vector<TensorSpec> stored_tensors(const ModelDescription& d, const sharing::ReplacementSchedule& s,
                                       TransformKind kind, std::size_t r) {
    const std::size_t d1 = d.d_model, d2 = d.d_hidden;
    std::vector<TensorSpec> out;
    out.push_back({"tok_emb", d.vocab_size, d1});
    if (d.position_embeddings) out.push_back({"pos_emb", d.position_embeddings, d1});
    for (std::size_t l = 1; l <= d.n_layers; ++l) {
        const std::string p = "layers." + std::to_string(l) + ".";
        out.push_back({p + "attn_norm", 1, d1});
        for (const char* w : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"}) out.push_back({p + w, d1, d1});
        out.push_back({p + "mlp_norm", 1, d1});
        if (!s.is_target(l)) {
            out.push_back({p + "mlp.gate", d1, d2});
            out.push_back({p + "mlp.up", d1, d2});
            out.push_back({p + "mlp.down", d2, d1});
            continue;
        }
        if (r == 0) continue;
        const auto [n1, n2] = sharing::extra_factor_names(kind);
        for (model::Role role : model::kMlpRoles) {
            const auto [rows, cols] = sharing::projection_shape(role, d1, d2);
            const std::string t = "target." + std::to_string(l) + "." + model::role_name(role) + ".";
            out.push_back({t + "alpha", 1, 1});
            out.push_back({t + "A", rows, r});
            out.push_back({t + "B", r, cols});
            switch (kind) {
                case TransformKind::G0: break;
                case TransformKind::G1:
                    out.push_back({t + n1, r, cols});
                    out.push_back({t + n2, r, cols});
                    break;
                case TransformKind::G2:
                    out.push_back({t + n1, rows, r});
                    out.push_back({t + n2, rows, r});
                    break;
                case TransformKind::G3:
                    out.push_back({t + n1, rows, r});
                    out.push_back({t + n2, r, cols});
                    break;
            }
        }
    }
    out.push_back({"final_norm", 1, d1});
    out.push_back({"head", d1, d.vocab_size});
    return out;
}

std::size_t stored_parameters(const ModelDescription& d, const sharing::ReplacementSchedule& s, TransformKind kind,
                              std::size_t r) {
    const std::size_t x = s.target_count();
    return d.total_parameters() - x * d.mlp_parameters_per_layer() +
           x * recovery_parameters_per_layer(kind, r, d.d_model, d.d_hidden);
}

double stored_bytes(const ModelDescription& d, const sharing::ReplacementSchedule& s, TransformKind kind,
                    std::size_t r, const CostModel& cm) {
    return cm.bytes_per_param * static_cast<double>(stored_parameters(d, s, kind, r)) +
           cm.overhead_bytes_per_layer * static_cast<double>(s.stored_layers());
}

RunEstimate simulate_run(const ModelDescription& d, const sharing::ReplacementSchedule& s, TransformKind kind,
                         std::size_t r, const CostModel& cm) {
    cm.validate();
    if (s.n_layers != d.n_layers) {
        throw std::invalid_argument("schedule has " + std::to_string(s.n_layers) + " layers, model has " +
                                    std::to_string(d.n_layers));
    }
    RunEstimate e;
    e.stored_bytes = stored_bytes(d, s, kind, r, cm);
    e.load_init_time = e.stored_bytes / cm.load_bandwidth +
                       static_cast<double>(s.stored_layers()) * cm.per_layer_init_overhead;
    const double reconstructed =
        r == 0 ? 0.0 : static_cast<double>(s.target_count() * d.mlp_parameters_per_layer());
    e.forward_time = static_cast<double>(d.total_parameters()) / cm.compute_rate +
                     reconstructed / cm.lora_reconstruct_rate;
    e.total_time = e.load_init_time + e.forward_time;
    return e;
}

RunEstimate simulate_base(const ModelDescription& d, const CostModel& cm) {
    sharing::ReplacementSchedule empty;
    empty.n_layers = d.n_layers;
    return simulate_run(d, empty, TransformKind::G0, 0, cm);
}

Savings savings_report(const RunEstimate& base, const RunEstimate& shared) {
    auto frac = [](double b, double s, const char* col) {
        if (b == 0.0) throw std::domain_error(std::string("savings: base ") + col + " is zero");
        return (b - s) / b;
    };
    return {frac(base.load_init_time, shared.load_init_time, "load_init"),
            frac(base.forward_time, shared.forward_time, "forward"),
            frac(base.total_time, shared.total_time, "total"),
            frac(base.stored_bytes, shared.stored_bytes, "model_size")};
}

namespace {

nlohmann::json estimate_json(const RunEstimate& e) {
    return {{"load_init_s", e.load_init_time},
            {"forward_s", e.forward_time},
            {"total_s", e.total_time},
            {"model_size_bytes", e.stored_bytes}};
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace

nlohmann::json LatencyReport::to_json() const {
    return {{"schema_version", kReportSchemaVersion},
            {"model",
             {{"name", model.name},
              {"n_layers", model.n_layers},
              {"d_model", model.d_model},
              {"d_hidden", model.d_hidden},
              {"vocab_size", model.vocab_size},
              {"position_embeddings", model.position_embeddings},
              {"parameters", model.total_parameters()}}},
            {"cost_model", cost.to_json()},
            {"schedule", schedule},
            {"kind", kind},
            {"rank", rank},
            {"original", estimate_json(base)},
            {"shared", estimate_json(shared)},
            {"saving",
             {{"load_init", savings.load_init},
              {"forward", savings.forward},
              {"total", savings.total},
              {"model_size", savings.model_size}}}};
}

std::string LatencyReport::to_csv() const {
    std::ostringstream out;
    out << "model,load_init,forward,total,model_size\n";
    out << "original," << fmt(base.load_init_time) << ',' << fmt(base.forward_time) << ',' << fmt(base.total_time)
        << ',' << fmt(base.stored_bytes) << '\n';
    out << "shared," << fmt(shared.load_init_time) << ',' << fmt(shared.forward_time) << ','
        << fmt(shared.total_time) << ',' << fmt(shared.stored_bytes) << '\n';
    out << "saving," << fmt(savings.load_init) << ',' << fmt(savings.forward) << ',' << fmt(savings.total) << ','
        << fmt(savings.model_size) << '\n';
    return out.str();
}

LatencyReport latency_report(const ModelDescription& d, const sharing::ReplacementSchedule& s, TransformKind kind,
                             std::size_t r, const CostModel& cm) {
    LatencyReport rep;
    rep.model = d;
    rep.cost = cm;
    rep.schedule = sharing::format_groups(s);
    rep.kind = sharing::transform_name(kind);
    rep.rank = r;
    rep.base = simulate_base(d, cm);
    rep.shared = simulate_run(d, s, kind, r, cm);
    rep.savings = savings_report(rep.base, rep.shared);
    return rep;
}

}  // namespace sharp::latency
