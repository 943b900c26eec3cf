// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0
//
// Pipeline verbs. Each reads its prerequisites from config.out, writes its
// artifacts and a JSON report there, and returns the report. Reports carry the
// config echo and git blob hashes of their inputs, never timestamps.

#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "sharp/cli/config.h"
#include "sharp/data/corpus.h"

namespace sharp::cli {

inline constexpr int kReportSchemaVersion = 1;

struct Artifacts {
    std::filesystem::path dir;

    std::filesystem::path base() const { return dir / "base.shrp"; }
    std::filesystem::path slw() const { return dir / "recovery_slw.shrq"; }
    std::filesystem::path sft() const { return dir / "recovery_sft.shrq"; }
    std::filesystem::path drop_sft() const { return dir / "recovery_drop_sft.shrq"; }
    std::filesystem::path report(const std::string& name) const { return dir / (name + ".json"); }
};

struct LoadedCorpus {
    data::Corpus train;
    data::Corpus eval;
    std::string hash;  // git blob hash of the raw text
};

// Reads corpus.path, or generates the synthetic corpus when it is empty, and
// splits it by the global seed.
LoadedCorpus load_corpus(const ExperimentConfig& c);

nlohmann::json cmd_pretrain(const ExperimentConfig& c);
nlohmann::json cmd_plan(const ExperimentConfig& c);
nlohmann::json cmd_slw(const ExperimentConfig& c);
// drop_baseline trains reference-free factors on the target layers instead.
nlohmann::json cmd_sft(const ExperimentConfig& c, bool drop_baseline = false);
nlohmann::json cmd_eval(const ExperimentConfig& c);
nlohmann::json cmd_probe(const ExperimentConfig& c, const std::string& probe);
nlohmann::json cmd_latency(const ExperimentConfig& c);

}  // namespace sharp::cli
