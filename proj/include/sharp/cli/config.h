// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "sharp/model/pretrain.h"
#include "sharp/model/weights.h"
#include "sharp/recovery/sft.h"
#include "sharp/recovery/slw.h"
#include "sharp/sharing/schedule.h"
#include "sharp/sharing/transform.h"

namespace sharp::cli {

inline constexpr int kConfigSchemaVersion = 1;

// Errors carry a short category so the CLI can print one parsable line.
class CliError : public std::runtime_error {
public:
    CliError(std::string category, const std::string& message)
        : std::runtime_error(message), category_(std::move(category)) {}
    const std::string& category() const { return category_; }

private:
    std::string category_;
};

struct CorpusConfig {
    std::string path;  // empty: deterministic synthetic corpus
    std::size_t synthetic_bytes = 1 << 20;
    double eval_fraction = 0.01;
};

struct ExperimentConfig {
    int schema_version = kConfigSchemaVersion;
    std::uint64_t seed = 0;
    CorpusConfig corpus;
    model::ModelConfig model;
    model::PretrainConfig pretrain;
    std::string schedule = "next";  // builtin name or custom=FILE
    sharing::TransformKind kind = sharing::TransformKind::G0;
    std::size_t rank = 8;
    std::size_t matched_from = 0;  // r0 > 0 replaces rank by matched_rank(kind, r0)
    recovery::SlwConfig slw;
    recovery::SftConfig sft;
    bool only_sft = false;
    std::string latency_model = "llama2-7b";  // or "toy"
    std::string cost_model;  // JSON path; empty: calibrated mobile model
    bool no_lora = false;
    std::string out = "out";

    // Seeds every stage from `seed`.
    void propagate_seed();
    std::size_t effective_rank() const;

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
};

// Throws CliError("config", ...) for unreadable files, bad JSON, unknown keys or
// a schema version other than kConfigSchemaVersion.
ExperimentConfig load_config(const std::filesystem::path& path);

// Resolves "next".."ori" for the config's layer count, or reads custom=FILE.
sharing::ReplacementSchedule resolve_schedule(const std::string& spec, std::size_t n_layers);

}  // namespace sharp::cli
