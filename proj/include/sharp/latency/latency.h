// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0
//
// Analytical storage and run-time model of layer-wise inference with shared
// MLP layers.

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sharp/model/weights.h"
#include "sharp/sharing/schedule.h"
#include "sharp/sharing/transform.h"

namespace sharp::latency {

inline constexpr int kReportSchemaVersion = 1;

// Decoder-only architecture with gated MLPs and untied input/output embeddings.
struct ModelDescription {
    std::string name;
    std::size_t n_layers = 0;
    std::size_t d_model = 0;
    std::size_t d_hidden = 0;
    std::size_t vocab_size = 0;
    std::size_t position_embeddings = 0;  // learned positions; 0 for rotary models

    static ModelDescription llama2_7b();
    static ModelDescription from_config(const model::ModelConfig& c);

    std::size_t mlp_parameters_per_layer() const { return 3 * d_model * d_hidden; }
    std::size_t total_parameters() const;
};

struct CostModel {
    double bytes_per_param = 0.5;
    double load_bandwidth = 1e9;            // bytes/s
    double per_layer_init_overhead = 0.0;   // s per stored layer
    double compute_rate = 1e9;              // params/s
    double lora_reconstruct_rate = 1e9;     // reconstructed params/s
    double overhead_bytes_per_layer = 0.0;  // per stored layer

    // Throws std::invalid_argument when a rate or size is not positive.
    void validate() const;

    // Solves bandwidth, compute rate and per-layer overhead bytes so that the
    // unshared model takes exactly the given load/init and forward times and
    // occupies size_bytes.
    static CostModel calibrate(const ModelDescription& d, double bytes_per_param, double per_layer_init_overhead,
                               double load_init_seconds, double forward_seconds, double size_bytes);
    // Calibrated to the phone measurements of the unshared Llama2-7b.
    static CostModel mobile_llama2_7b();

    nlohmann::json to_json() const;
    static CostModel from_json(const nlohmann::json& j);
};

struct TensorSpec {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t size() const { return rows * cols; }
};

// Recovery parameters stored for one target layer (all three projections).
std::size_t recovery_parameters_per_layer(sharing::TransformKind kind, std::size_t r, std::size_t d1,
                                          std::size_t d2);

// Every tensor the shared model keeps on disk, one entry per tensor. r = 0
// stores no recovery factors.
std::vector<TensorSpec> stored_tensors(const ModelDescription& d, const sharing::ReplacementSchedule& s,
                                       sharing::TransformKind kind, std::size_t r);

std::size_t stored_parameters(const ModelDescription& d, const sharing::ReplacementSchedule& s,
                              sharing::TransformKind kind, std::size_t r);
double stored_bytes(const ModelDescription& d, const sharing::ReplacementSchedule& s, sharing::TransformKind kind,
                    std::size_t r, const CostModel& cm);

struct RunEstimate {
    double load_init_time = 0.0;
    double forward_time = 0.0;
    double total_time = 0.0;
    double stored_bytes = 0.0;
};

RunEstimate simulate_run(const ModelDescription& d, const sharing::ReplacementSchedule& s,
                         sharing::TransformKind kind, std::size_t r, const CostModel& cm);

// Unshared model: an empty schedule.
RunEstimate simulate_base(const ModelDescription& d, const CostModel& cm);

struct Savings {
    double load_init = 0.0;
    double forward = 0.0;
    double total = 0.0;
    double model_size = 0.0;
};

// (base - shared) / base per column; std::domain_error on a zero base column.
Savings savings_report(const RunEstimate& base, const RunEstimate& shared);

struct LatencyReport {
    ModelDescription model;
    CostModel cost;
    std::string schedule;
    std::string kind;
    std::size_t rank = 0;
    RunEstimate base;
    RunEstimate shared;
    Savings savings;

    nlohmann::json to_json() const;
    // Rows: original, shared, saving; the four run-time columns.
    std::string to_csv() const;
};

LatencyReport latency_report(const ModelDescription& d, const sharing::ReplacementSchedule& s,
                             sharing::TransformKind kind, std::size_t r, const CostModel& cm);

}  // namespace sharp::latency
