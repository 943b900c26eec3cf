// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include "sharp/recovery/io.h"

#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "sharp/model/checkpoint.h"

namespace sharp::recovery {

using model::CheckpointError;
using sharing::FactorKey;
using sharing::ProjectionFactors;

namespace {

void put(model::TensorFile& f, const std::string& prefix, const ProjectionFactors& p, sharing::TransformKind kind) {
    const auto [n1, n2] = sharing::extra_factor_names(kind);
    if (p.alpha.size()) f.tensors.emplace_back(prefix + "alpha", p.alpha);
    f.tensors.emplace_back(prefix + "A", p.a);
    f.tensors.emplace_back(prefix + "B", p.b);
    if (p.extra1.size()) f.tensors.emplace_back(prefix + n1, p.extra1);
    if (p.extra2.size()) f.tensors.emplace_back(prefix + n2, p.extra2);
}

}  // namespace

void save_recovery(const sharing::RecoveryParams& rp, const std::filesystem::path& path) {
    model::TensorFile f;
    f.magic = "SHRQ";
    f.metadata = nlohmann::json{{"kind", sharing::transform_name(rp.kind)},
                                {"rank", rp.rank},
                                {"share_reference", rp.share_reference},
                                {"schedule_kind", sharing::schedule_name(rp.schedule.kind)},
                                {"schedule", sharing::format_schedule(rp.schedule)}}
                     .dump();
    for (const auto& [k, p] : rp.targets) {
        put(f, "target." + std::to_string(k.first) + "." + model::role_name(k.second) + ".", p, rp.kind);
    }
    for (const auto& [k, p] : rp.adapters) {
        put(f, "adapter." + std::to_string(k.first) + "." + model::role_name(k.second) + ".", p, rp.kind);
    }
    model::write_tensor_file(path, f);
}

sharing::RecoveryParams load_recovery(const std::filesystem::path& path) {
    model::TensorFile f = model::read_tensor_file(path, "SHRQ");
    sharing::RecoveryParams rp;
    try {
        const auto meta = nlohmann::json::parse(f.metadata);
        rp.kind = sharing::transform_from_name(meta.at("kind").get<std::string>());
        rp.rank = meta.at("rank");
        rp.share_reference = meta.at("share_reference");
        rp.schedule = sharing::parse_schedule(meta.at("schedule").get<std::string>());
        rp.schedule.kind = sharing::schedule_from_name(meta.at("schedule_kind").get<std::string>());
    } catch (const std::exception& e) {
        throw CheckpointError(CheckpointError::Kind::Format, "unreadable recovery metadata in " + path.string() +
                                                                 ": " + e.what());
    }
    const auto [n1, n2] = sharing::extra_factor_names(rp.kind);
    for (auto& [name, t] : f.tensors) {
        // <group>.<layer>.<role>.<factor>
        const auto d1 = name.find('.'), d2 = name.find('.', d1 + 1), d3 = name.find('.', d2 + 1);
        if (d1 == std::string::npos || d2 == std::string::npos || d3 == std::string::npos) {
            throw CheckpointError(CheckpointError::Kind::Format, "unexpected tensor name " + name);
        }
        const std::string group = name.substr(0, d1);
        const FactorKey key{std::stoul(name.substr(d1 + 1, d2 - d1 - 1)),
                            model::role_from_name(name.substr(d2 + 1, d3 - d2 - 1))};
        const std::string factor = name.substr(d3 + 1);
        auto& map = group == "target" ? rp.targets : rp.adapters;
        ProjectionFactors& p = map[key];
        if (factor == "alpha") p.alpha = std::move(t);
        else if (factor == "A") p.a = std::move(t);
        else if (factor == "B") p.b = std::move(t);
        else if (factor == n1) p.extra1 = std::move(t);
        else if (factor == n2) p.extra2 = std::move(t);
        else throw CheckpointError(CheckpointError::Kind::Format, "unexpected tensor name " + name);
    }
    return rp;
}

void write_loss_csv(const std::filesystem::path& path, std::span<const double> losses) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "step,loss\n";
    char buf[64];
    for (std::size_t i = 0; i < losses.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.9g\n", i, losses[i]);
        out << buf;
    }
}

}  // namespace sharp::recovery
