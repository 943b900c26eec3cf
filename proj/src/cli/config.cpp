// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include "sharp/cli/config.h"

#include <fstream>
#include <set>
#include <sstream>

#include "sharp/sharing/accounting.h"

namespace sharp::cli {

using nlohmann::json;

namespace {

void only_keys(const json& j, const char* where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw CliError("config", std::string(where) + " must be an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : j.items()) {
        if (!allowed.count(k)) throw CliError("config", "unknown key '" + k + "' in " + where);
    }
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw CliError("config", std::string("bad value for '") + key + "'");
    }
}

}  // namespace

void ExperimentConfig::propagate_seed() {
    model.seed = seed;
    pretrain.seed = seed;
    slw.seed = seed;
    sft.seed = seed;
}

std::size_t ExperimentConfig::effective_rank() const {
    if (matched_from == 0) return rank;
    return sharing::matched_rank(kind, matched_from, model.d_model, model.d_hidden);
}

json ExperimentConfig::to_json() const {
    return {{"schema_version", schema_version},
            {"seed", seed},
            {"corpus",
             {{"path", corpus.path}, {"synthetic_bytes", corpus.synthetic_bytes}, {"eval_fraction", corpus.eval_fraction}}},
            {"model",
             {{"n_layers", model.n_layers},
              {"d_model", model.d_model},
              {"d_hidden", model.d_hidden},
              {"n_heads", model.n_heads},
              {"vocab_size", model.vocab_size},
              {"max_seq_len", model.max_seq_len}}},
            {"pretrain",
             {{"lr", pretrain.lr},
              {"warmup_fraction", pretrain.warmup_fraction},
              {"final_lr_fraction", pretrain.final_lr_fraction},
              {"clip", pretrain.clip},
              {"steps", pretrain.steps},
              {"batch_size", pretrain.batch_size}}},
            {"schedule", schedule},
            {"kind", sharing::transform_name(kind)},
            {"rank", rank},
            {"matched_from", matched_from},
            {"slw",
             {{"lr", slw.lr},
              {"epochs", slw.epochs},
              {"batch_size", slw.batch_size},
              {"capture_fraction", slw.capture_fraction}}},
            {"sft",
             {{"lr", sft.lr},
              {"warmup_fraction", sft.warmup_fraction},
              {"epochs", sft.epochs},
              {"batch_size", sft.batch_size},
              {"max_seq_len", sft.max_seq_len},
              {"full_lora", sft.full_lora},
              {"full_lora_rank", sft.full_lora_rank},
              {"data_fraction", sft.data_fraction},
              {"max_steps", sft.max_steps},
              {"clip", sft.clip}}},
            {"only_sft", only_sft},
            {"latency_model", latency_model},
            {"cost_model", cost_model},
            {"no_lora", no_lora},
            {"out", out}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    only_keys(j, "config",
              {"schema_version", "seed", "corpus", "model", "pretrain", "schedule", "kind", "rank", "matched_from",
               "slw", "sft", "only_sft", "latency_model", "cost_model", "no_lora", "out"});
    ExperimentConfig c;
    if (!j.contains("schema_version")) throw CliError("config", "missing schema_version");
    read(j, "schema_version", c.schema_version);
    if (c.schema_version != kConfigSchemaVersion) {
        throw CliError("config", "unsupported schema_version " + std::to_string(c.schema_version) + " (expected " +
                                     std::to_string(kConfigSchemaVersion) + ")");
    }
    read(j, "seed", c.seed);
    if (j.contains("corpus")) {
        const auto& k = j["corpus"];
        only_keys(k, "corpus", {"path", "synthetic_bytes", "eval_fraction"});
        read(k, "path", c.corpus.path);
        read(k, "synthetic_bytes", c.corpus.synthetic_bytes);
        read(k, "eval_fraction", c.corpus.eval_fraction);
    }
    if (j.contains("model")) {
        const auto& k = j["model"];
        only_keys(k, "model", {"n_layers", "d_model", "d_hidden", "n_heads", "vocab_size", "max_seq_len"});
        read(k, "n_layers", c.model.n_layers);
        read(k, "d_model", c.model.d_model);
        read(k, "d_hidden", c.model.d_hidden);
        read(k, "n_heads", c.model.n_heads);
        read(k, "vocab_size", c.model.vocab_size);
        read(k, "max_seq_len", c.model.max_seq_len);
    }
    if (j.contains("pretrain")) {
        const auto& k = j["pretrain"];
        only_keys(k, "pretrain", {"lr", "warmup_fraction", "final_lr_fraction", "clip", "steps", "batch_size"});
        read(k, "lr", c.pretrain.lr);
        read(k, "warmup_fraction", c.pretrain.warmup_fraction);
        read(k, "final_lr_fraction", c.pretrain.final_lr_fraction);
        read(k, "clip", c.pretrain.clip);
        read(k, "steps", c.pretrain.steps);
        read(k, "batch_size", c.pretrain.batch_size);
    }
    read(j, "schedule", c.schedule);
    if (j.contains("kind")) {
        std::string k;
        read(j, "kind", k);
        try {
            c.kind = sharing::transform_from_name(k);
        } catch (const std::invalid_argument& e) {
            throw CliError("config", e.what());
        }
    }
    read(j, "rank", c.rank);
    read(j, "matched_from", c.matched_from);
    if (j.contains("slw")) {
        const auto& k = j["slw"];
        only_keys(k, "slw", {"lr", "epochs", "batch_size", "capture_fraction"});
        read(k, "lr", c.slw.lr);
        read(k, "epochs", c.slw.epochs);
        read(k, "batch_size", c.slw.batch_size);
        read(k, "capture_fraction", c.slw.capture_fraction);
    }
    if (j.contains("sft")) {
        const auto& k = j["sft"];
        only_keys(k, "sft",
                  {"lr", "warmup_fraction", "epochs", "batch_size", "max_seq_len", "full_lora", "full_lora_rank",
                   "data_fraction", "max_steps", "clip"});
        read(k, "lr", c.sft.lr);
        read(k, "warmup_fraction", c.sft.warmup_fraction);
        read(k, "epochs", c.sft.epochs);
        read(k, "batch_size", c.sft.batch_size);
        read(k, "max_seq_len", c.sft.max_seq_len);
        read(k, "full_lora", c.sft.full_lora);
        read(k, "full_lora_rank", c.sft.full_lora_rank);
        read(k, "data_fraction", c.sft.data_fraction);
        read(k, "max_steps", c.sft.max_steps);
        read(k, "clip", c.sft.clip);
    }
    read(j, "only_sft", c.only_sft);
    read(j, "latency_model", c.latency_model);
    read(j, "cost_model", c.cost_model);
    read(j, "no_lora", c.no_lora);
    read(j, "out", c.out);
    if (c.latency_model != "llama2-7b" && c.latency_model != "toy") {
        throw CliError("config", "latency_model must be llama2-7b or toy");
    }
    c.propagate_seed();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CliError("config", "cannot read config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw CliError("config", "invalid JSON in " + path.string() + ": " + e.what());
    }
    return ExperimentConfig::from_json(j);
}

sharing::ReplacementSchedule resolve_schedule(const std::string& spec, std::size_t n_layers) {
    constexpr std::string_view kCustom = "custom=";
    if (spec.rfind(kCustom, 0) == 0) {
        const std::filesystem::path p = spec.substr(kCustom.size());
        std::ifstream in(p);
        if (!in) throw CliError("missing-input", "schedule file not found: " + p.string());
        std::stringstream ss;
        ss << in.rdbuf();
        sharing::ReplacementSchedule s;
        try {
            s = sharing::parse_schedule(ss.str());
        } catch (const std::invalid_argument& e) {
            throw CliError("schedule", e.what());
        }
        if (s.n_layers != n_layers) {
            throw CliError("schedule", "schedule file is for " + std::to_string(s.n_layers) + " layers, model has " +
                                           std::to_string(n_layers));
        }
        return s;
    }
    try {
        const auto kind = sharing::schedule_from_name(spec);
        if (kind == sharing::ScheduleKind::Custom) throw std::invalid_argument("custom schedules need custom=FILE");
        return sharing::build_schedule(kind, n_layers);
    } catch (const std::invalid_argument& e) {
        throw CliError("schedule", e.what());
    }
}

}  // namespace sharp::cli
