// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0
//
// Diagnostic measurements on a trained model: verbatim replacement of one
// layer's MLP by another's, relative error between adjacent layers, and the
// perplexity cost of zeroing single MLP layers.

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sharp/model/transformer.h"

namespace sharp::probes {

inline constexpr int kReportSchemaVersion = 1;

enum class ProbeKind { Replace, RelativeError, ZeroOut };

const char* probe_name(ProbeKind k);
ProbeKind probe_from_name(std::string_view name);

// reference is 0 for per-layer rows; role is empty unless the row is per projection.
struct ProbeRow {
    std::size_t reference = 0;
    std::size_t layer = 0;
    std::string role;
    double value = 0.0;
    double delta = 0.0;
    bool boundary = false;
};

struct ProbeReport {
    ProbeKind kind = ProbeKind::Replace;
    double baseline = 0.0;
    std::vector<ProbeRow> rows;
    std::map<std::string, double> means;
    std::vector<std::string> notes;
    nlohmann::json config = nlohmann::json::object();

    nlohmann::json to_json() const;
    std::string to_csv() const;
};

// Perplexity with layer l's MLP weights replaced by layer j's. Requires
// 1 <= j < l <= N; allow_same admits j == l.
double replace_probe(const model::ModelVars& base, std::size_t j, std::size_t l,
                     std::span<const std::int32_t> stream, bool allow_same = false);

// Every pair in `pairs`, or (l-1, l) for l = 2..N when empty.
ProbeReport replace_sweep(const model::ModelVars& base, std::span<const std::int32_t> stream,
                          std::vector<std::pair<std::size_t, std::size_t>> pairs = {});

struct RelativeError {
    std::vector<double> ratios;  // ratios[i-1] = |W(i+1) - W(i)|_F / |W(i)|_F
    double mean = 0.0;
};

RelativeError adjacent_relative_error(const model::WeightStore& w, model::Role role);

// Rows for each role and adjacent pair, means per role plus "combined".
ProbeReport relative_error_report(const model::WeightStore& w);

// ppl(layer zeroed) - ppl(base); positive means the model got worse.
double zero_out_delta(const model::ModelVars& base, std::span<const std::int32_t> stream, std::size_t layer,
                      double base_ppl);

// Layers default to 2..N; layer 1 is left out unless listed explicitly.
ProbeReport zero_out_sensitivity(const model::ModelVars& base, std::span<const std::int32_t> stream,
                                 std::optional<std::vector<std::size_t>> layers = std::nullopt);

}  // namespace sharp::probes
