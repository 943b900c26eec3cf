// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include <malloc.h>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sharp/cli/commands.h"
#include "sharp/cli/config.h"

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool only_sft = false;
    bool full_lora = false;
    std::optional<std::size_t> rank;
    std::string kind;
    std::string schedule;
    bool no_lora = false;
    std::string probe;
    bool drop_baseline = false;
};

sharp::cli::ExperimentConfig build_config(const Flags& f) {
    using sharp::cli::CliError;
    sharp::cli::ExperimentConfig c;
    if (!f.config.empty()) c = sharp::cli::load_config(f.config);
    if (f.seed) c.seed = *f.seed;
    if (!f.out.empty()) c.out = f.out;
    if (f.only_sft) c.only_sft = true;
    if (f.full_lora) c.sft.full_lora = true;
    if (f.rank) {
        c.rank = *f.rank;
        c.matched_from = 0;
    }
    if (!f.kind.empty()) {
        try {
            c.kind = sharp::sharing::transform_from_name(f.kind);
        } catch (const std::invalid_argument& e) {
            throw CliError("usage", e.what());
        }
    }
    if (!f.schedule.empty()) c.schedule = f.schedule;
    if (f.no_lora) c.no_lora = true;
    c.propagate_seed();
    return c;
}

std::string one_line(std::string s) {
    for (char& ch : s) {
        if (ch == '\n' || ch == '\r') ch = ' ';
    }
    return s;
}

void print_summary(const std::string& verb, const nlohmann::json& rep) {
    if (verb == "pretrain") {
        std::printf("baseline perplexity %.6f (untrained %.6f)\n", rep["baseline_perplexity"].get<double>(),
                    rep["untrained_perplexity"].get<double>());
    } else if (verb == "plan") {
        std::printf("%s\ntau %.1f%%  s %.4f  stored parameters %zu\n",
                    rep["schedule"]["listing"].get<std::string>().c_str(), rep["model"]["tau_percent"].get<double>(),
                    rep["model"]["s_exact"].get<double>(), rep["model"]["stored_parameters"].get<std::size_t>());
    } else if (verb == "slw" || verb == "sft") {
        std::printf("%s perplexity %.6f\n", rep["label"].get<std::string>().c_str(), rep["perplexity"].get<double>());
    } else if (verb == "eval") {
        for (const auto& r : rep["rows"]) {
            std::printf("%-24s %12.6f %10.4f\n", r["label"].get<std::string>().c_str(), r["perplexity"].get<double>(),
                        r["relative_to_baseline"].get<double>());
        }
    } else if (verb == "probe") {
        std::printf("%s: %zu rows\n", rep["probe"].get<std::string>().c_str(), rep["rows"].size());
    } else if (verb == "latency") {
        const auto& s = rep["saving"];
        std::printf("saving: load %.1f%%  forward %.1f%%  total %.1f%%  size %.1f%%\n",
                    100 * s["load_init"].get<double>(), 100 * s["forward"].get<double>(),
                    100 * s["total"].get<double>(), 100 * s["model_size"].get<double>());
    }
}

}  // namespace

int main(int argc, char** argv) {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);

    CLI::App app{"sharp: adjacent-layer MLP sharing with low-rank recovery"};
    app.require_subcommand(1);
    Flags f;
    auto common = [&f](CLI::App* sub) {
        sub->add_option("--config", f.config, "experiment config JSON");
        sub->add_option("--seed", f.seed, "global seed");
        sub->add_option("--out", f.out, "output directory");
        sub->add_option("--rank", f.rank, "recovery rank r");
        sub->add_option("--kind", f.kind, "transform kind g0..g3");
        sub->add_option("--schedule", f.schedule, "next, next2, back, front, more, max, ori or custom=FILE");
    };
    auto* pretrain = app.add_subcommand("pretrain", "train the base model");
    auto* plan = app.add_subcommand("plan", "schedule, stored ratio and compression report");
    auto* slw = app.add_subcommand("slw", "single layer warmup of the recovery factors");
    auto* sft = app.add_subcommand("sft", "end-to-end fine-tuning of the recovery factors");
    auto* eval = app.add_subcommand("eval", "held-out perplexities side by side");
    auto* probe = app.add_subcommand("probe", "diagnostic probes");
    auto* lat = app.add_subcommand("latency", "storage and run-time model");
    for (auto* s : {pretrain, plan, slw, sft, eval, probe, lat}) common(s);
    sft->add_flag("--only-sft", f.only_sft, "start from fresh factors instead of the warmup output");
    sft->add_flag("--full-lora", f.full_lora, "also attach adapters to every stored layer");
    sft->add_flag("--drop-baseline", f.drop_baseline, "train reference-free factors for the drop baseline");
    eval->add_flag("--only-sft", f.only_sft, "label the fine-tuned row as only-SFT");
    probe->add_option("--probe", f.probe, "replace, relative-error or zero-out")->required();
    lat->add_flag("--no-lora", f.no_lora, "store no recovery factors (r = 0)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << one_line(e.what()) << "\n";
        return 2;
    }

    const std::string verb = app.get_subcommands().front()->get_name();
    try {
        const auto c = build_config(f);
        nlohmann::json rep;
        if (verb == "pretrain") rep = sharp::cli::cmd_pretrain(c);
        else if (verb == "plan") rep = sharp::cli::cmd_plan(c);
        else if (verb == "slw") rep = sharp::cli::cmd_slw(c);
        else if (verb == "sft") rep = sharp::cli::cmd_sft(c, f.drop_baseline);
        else if (verb == "eval") rep = sharp::cli::cmd_eval(c);
        else if (verb == "probe") rep = sharp::cli::cmd_probe(c, f.probe);
        else rep = sharp::cli::cmd_latency(c);
        print_summary(verb, rep);
    } catch (const sharp::cli::CliError& e) {
        std::cerr << "error: " << e.category() << ": " << one_line(e.what()) << "\n";
        return e.category() == "missing-prerequisite" || e.category() == "missing-input" ? 3 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << one_line(e.what()) << "\n";
        return 4;
    }
    return 0;
}
