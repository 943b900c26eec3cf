// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "sharp/cli/commands.h"
#include "sharp/cli/config.h"

using namespace sharp;
using namespace sharp::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("sharp_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string category_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const CliError& e) {
        return e.category();
    }
    return "";
}

}  // namespace

TEST_CASE("config json round trip") {
    ExperimentConfig c;
    c.seed = 9;
    c.kind = sharing::TransformKind::G2;
    c.rank = 5;
    c.sft.full_lora = true;
    c.schedule = "back";
    auto back = ExperimentConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    CHECK(back.sft.seed == 9);
    CHECK(back.model.seed == 9);
}

TEST_CASE("config errors") {
    auto j = ExperimentConfig{}.to_json();
    j["bogus"] = 1;
    CHECK(category_of([&] { ExperimentConfig::from_json(j); }) == "config");
    j = ExperimentConfig{}.to_json();
    j["schema_version"] = 2;
    CHECK(category_of([&] { ExperimentConfig::from_json(j); }) == "config");
    j.erase("schema_version");
    CHECK(category_of([&] { ExperimentConfig::from_json(j); }) == "config");
    j = ExperimentConfig{}.to_json();
    j["sft"]["lr"] = "fast";
    CHECK(category_of([&] { ExperimentConfig::from_json(j); }) == "config");
    j = ExperimentConfig{}.to_json();
    j["kind"] = "g9";
    CHECK(category_of([&] { ExperimentConfig::from_json(j); }) == "config");
    CHECK(category_of([] { load_config("/nonexistent/config.json"); }) == "config");
    const auto dir = scratch("badjson");
    std::ofstream(dir / "c.json") << "{ not json";
    CHECK(category_of([&] { load_config(dir / "c.json"); }) == "config");
}

TEST_CASE("matched rank in config") {
    ExperimentConfig c;
    c.kind = sharing::TransformKind::G1;
    c.matched_from = 8;
    CHECK(c.effective_rank() == 3);
    c.matched_from = 0;
    CHECK(c.effective_rank() == 8);
}

TEST_CASE("schedule resolution") {
    CHECK(resolve_schedule("next", 12).target_count() == 4);
    CHECK(category_of([] { resolve_schedule("sideways", 12); }) == "schedule");
    CHECK(category_of([] { resolve_schedule("custom", 12); }) == "schedule");
    CHECK(category_of([] { resolve_schedule("custom=/nonexistent/s.txt", 12); }) == "missing-input");
    const auto dir = scratch("sched");
    std::ofstream(dir / "s.txt") << "layers: 12\n(2:3,4), (6:7)\n";
    auto s = resolve_schedule("custom=" + (dir / "s.txt").string(), 12);
    CHECK(sharing::format_schedule(s) == "layers: 12\n(2:3,4), (6:7)\n");
    CHECK(category_of([&] { resolve_schedule("custom=" + (dir / "s.txt").string(), 10); }) == "schedule");
}

TEST_CASE("plan report at llama scale") {
    ExperimentConfig c;
    c.model.n_layers = 32;
    c.rank = 400;
    c.out = scratch("plan").string();
    auto rep = cmd_plan(c);
    CHECK(rep["schedule"]["targets"] == 14);
    CHECK(rep["llama2_7b"]["tau_percent"] == 56.3);
    CHECK(std::lround(rep["llama2_7b"]["s_exact_r400"].get<double>() * 100) == 62);
    CHECK(rep["llama2_7b"]["matched_ranks_r400"]["g1"] == 163);
    CHECK(rep["llama2_7b"]["matched_ranks_r400"]["g2"] == 259);
    CHECK(rep["llama2_7b"]["matched_ranks_r400"]["g3"] == 200);
    CHECK(fs::exists(fs::path(c.out) / "plan.json"));
    CHECK(fs::exists(fs::path(c.out) / "schedule.txt"));

    c.schedule = "more";
    auto more = cmd_plan(c);
    CHECK(more["llama2_7b"].contains("note"));
    CHECK(more["llama2_7b"]["nominal_tau"] == 0.25);
    CHECK(std::lround(more["llama2_7b"]["nominal_s_exact_r400"].get<double>() * 100) == 35);
}

TEST_CASE("latency report with and without recovery factors") {
    ExperimentConfig c;
    c.out = scratch("latency").string();
    c.no_lora = true;
    auto rep = cmd_latency(c);
    CHECK(rep["rank"] == 0);
    CHECK(rep["saving"]["forward"] == 0.0);
    CHECK(rep["saving"]["model_size"].get<double>() > 0.0);
    c.no_lora = false;
    c.cost_model = "/nonexistent/cost.json";
    CHECK(category_of([&] { cmd_latency(c); }) == "missing-input");
}

TEST_CASE("commands name missing prerequisites") {
    ExperimentConfig c;
    c.out = scratch("missing").string();
    CHECK(category_of([&] { cmd_slw(c); }) == "missing-prerequisite");
    CHECK(category_of([&] { cmd_eval(c); }) == "missing-prerequisite");
    CHECK(category_of([&] { cmd_probe(c, "zero-out"); }) == "missing-prerequisite");
    CHECK(category_of([&] { cmd_probe(c, "cosine"); }) == "usage");
}

TEST_CASE("small pipeline runs and reruns identically") {
    ExperimentConfig c;
    c.corpus.synthetic_bytes = 60000;
    c.corpus.eval_fraction = 0.05;
    c.model.n_layers = 6;
    c.model.d_model = 16;
    c.model.d_hidden = 40;
    c.model.n_heads = 2;
    c.model.max_seq_len = 32;
    c.pretrain.steps = 20;
    c.pretrain.batch_size = 4;
    c.slw.epochs = 1;
    c.sft.max_steps = 5;
    c.sft.batch_size = 4;
    c.sft.max_seq_len = 32;
    c.rank = 2;
    c.out = scratch("pipe").string();
    c.propagate_seed();

    auto run = [&] {
        std::vector<std::string> out;
        for (auto rep : {cmd_pretrain(c), cmd_slw(c), cmd_sft(c), cmd_sft(c, true), cmd_eval(c),
                         cmd_probe(c, "replace")}) {
            out.push_back(rep.dump());
        }
        return out;
    };
    CHECK(category_of([&] { cmd_sft(c); }) == "missing-prerequisite");
    auto a = run();
    auto b = run();
    CHECK(a == b);
    auto eval = nlohmann::json::parse(a[4]);
    CHECK(eval["rows"].size() == 6);
    CHECK(eval["rows"][3]["label"] == "SHARP (w/o f.t.)");
    CHECK(eval.contains("recorded_p0"));

    auto other = c;
    other.kind = sharing::TransformKind::G3;
    CHECK(category_of([&] { cmd_sft(other); }) == "mismatch");
    other.only_sft = true;
    CHECK(nlohmann::json(cmd_sft(other))["label"] == "SHARP (only SFT)");
}
