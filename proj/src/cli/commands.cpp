// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include "sharp/cli/commands.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "sharp/data/synthetic.h"
#include "sharp/latency/latency.h"
#include "sharp/model/checkpoint.h"
#include "sharp/model/digest.h"
#include "sharp/model/pretrain.h"
#include "sharp/model/transformer.h"
#include "sharp/probes/probes.h"
#include "sharp/recovery/io.h"
#include "sharp/sharing/accounting.h"
#include "sharp/sharing/view.h"

namespace sharp::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw CliError("io", "cannot write " + p.string());
    out << text;
    if (!out) throw CliError("io", "write failed for " + p.string());
}

json finish(const Artifacts& a, const std::string& name, json report) {
    write_text(a.report(name), report.dump(2) + "\n");
    return report;
}

Artifacts prepare(const ExperimentConfig& c) {
    Artifacts a{c.out};
    std::error_code ec;
    fs::create_directories(a.dir, ec);
    if (ec) throw CliError("io", "cannot create output directory " + a.dir.string() + ": " + ec.message());
    return a;
}

void require(const fs::path& p, const std::string& produced_by) {
    if (!fs::exists(p)) {
        throw CliError("missing-prerequisite", p.string() + " not found (run '" + produced_by + "' first)");
    }
}

json header(const std::string& command, const ExperimentConfig& c) {
    return {{"schema_version", kReportSchemaVersion}, {"command", command}, {"config", c.to_json()}};
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

double percent(double v) { return std::round(v * 1000.0) / 10.0; }

model::WeightStore load_base(const Artifacts& a) {
    require(a.base(), "pretrain");
    try {
        return model::load_checkpoint(a.base());
    } catch (const model::CheckpointError& e) {
        throw CliError("checkpoint", e.what());
    }
}

sharing::RecoveryParams load_params(const fs::path& p, const std::string& produced_by) {
    require(p, produced_by);
    try {
        return recovery::load_recovery(p);
    } catch (const model::CheckpointError& e) {
        throw CliError("checkpoint", e.what());
    }
}

void check_model_matches(const ExperimentConfig& c, const model::WeightStore& w) {
    const auto& m = w.config;
    if (m.n_layers != c.model.n_layers || m.d_model != c.model.d_model || m.d_hidden != c.model.d_hidden ||
        m.vocab_size != c.model.vocab_size) {
        throw CliError("mismatch", "base checkpoint dimensions differ from the config's model section");
    }
}

json groups_json(const sharing::ReplacementSchedule& s) {
    json out = json::array();
    for (const auto& g : s.groups) out.push_back({{"reference", g.reference}, {"targets", g.targets}});
    return out;
}

std::string losses_csv(const std::vector<double>& losses) {
    std::string out = "step,loss\n";
    for (std::size_t i = 0; i < losses.size(); ++i) out += std::to_string(i + 1) + "," + fmt(losses[i]) + "\n";
    return out;
}

}  // namespace

LoadedCorpus load_corpus(const ExperimentConfig& c) {
    std::string text;
    data::Corpus all;
    if (c.corpus.path.empty()) {
        text = data::synthetic_corpus(c.corpus.synthetic_bytes, c.seed);
        all = data::corpus_from_text(text);
        all.source = "synthetic";
    } else {
        if (!fs::exists(c.corpus.path)) throw CliError("missing-input", "corpus not found: " + c.corpus.path);
        try {
            all = data::load_and_tokenize(c.corpus.path);
        } catch (const std::runtime_error& e) {
            throw CliError("corpus", e.what());
        }
        std::ifstream in(c.corpus.path, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    LoadedCorpus out;
    out.hash = model::git_blob_sha1(text);
    try {
        std::tie(out.train, out.eval) = data::split(all, c.corpus.eval_fraction, c.seed);
    } catch (const std::invalid_argument& e) {
        throw CliError("corpus", e.what());
    }
    return out;
}

json cmd_pretrain(const ExperimentConfig& c) {
    const Artifacts a = prepare(c);
    try {
        c.model.validate();
    } catch (const std::invalid_argument& e) {
        throw CliError("config", e.what());
    }
    const LoadedCorpus corpus = load_corpus(c);
    const auto eval = data::token_stream(corpus.eval);
    const double untrained =
        model::perplexity(model::ModelVars::constants(model::init_model(c.model)), eval).perplexity;
    model::PretrainResult r;
    try {
        r = model::pretrain(c.model, corpus.train, c.pretrain);
    } catch (const std::runtime_error& e) {
        throw CliError("training", e.what());
    }
    model::save_checkpoint(r.weights, a.base());
    write_text(a.dir / "pretrain_loss.csv", losses_csv(r.losses));
    const auto p0 = model::perplexity(model::ModelVars::constants(r.weights), eval);

    json rep = header("pretrain", c);
    rep["inputs"] = {{"corpus", corpus.hash}};
    rep["outputs"] = {{"checkpoint", model::git_blob_sha1_file(a.base())}};
    rep["parameters"] = model::parameter_count(c.model);
    rep["train_sequences"] = corpus.train.sequences.size();
    rep["eval_sequences"] = corpus.eval.sequences.size();
    rep["eval_tokens"] = p0.tokens;
    rep["untrained_perplexity"] = untrained;
    rep["baseline_perplexity"] = p0.perplexity;
    rep["first_loss"] = r.losses.empty() ? 0.0 : r.losses.front();
    rep["final_loss"] = r.losses.empty() ? 0.0 : r.losses.back();
    return finish(a, "pretrain", rep);
}

json cmd_plan(const ExperimentConfig& c) {
    const Artifacts a = prepare(c);
    const auto s = resolve_schedule(c.schedule, c.model.n_layers);
    const std::size_t r = c.effective_rank();
    const std::size_t d1 = c.model.d_model, d2 = c.model.d_hidden;
    write_text(a.dir / "schedule.txt", sharing::format_schedule(s));

    json rep = header("plan", c);
    rep["schedule"] = {{"kind", sharing::schedule_name(s.kind)},
                       {"listing", sharing::format_groups(s)},
                       {"groups", groups_json(s)},
                       {"n_layers", s.n_layers},
                       {"targets", s.target_count()},
                       {"stored_layers", s.stored_layers()}};
    const auto cr = sharing::compression_ratio(s, c.kind, r, d1, d2);
    rep["model"] = {{"rank", r},
                    {"tau", sharing::stored_ratio(s)},
                    {"tau_percent", percent(sharing::stored_ratio(s))},
                    {"s_exact", cr.exact},
                    {"s_linearized", cr.linearized},
                    {"s_coefficient", cr.coefficient},
                    {"full_parameters", model::parameter_count(c.model)},
                    {"stored_parameters", latency::stored_parameters(latency::ModelDescription::from_config(c.model),
                                                                     s, c.kind, r)}};
    json matched = json::object();
    const std::size_t r0 = c.matched_from ? c.matched_from : c.rank;
    for (auto k : {sharing::TransformKind::G0, sharing::TransformKind::G1, sharing::TransformKind::G2,
                   sharing::TransformKind::G3}) {
        matched[sharing::transform_name(k)] = sharing::matched_rank(k, r0, d1, d2);
    }
    rep["matched_ranks"] = {{"r0", r0}, {"ranks", matched}};

    // Same schedule family at Llama2-7b scale.
    if (s.kind != sharing::ScheduleKind::Custom) {
        const auto big = sharing::build_schedule(s.kind, 32);
        const auto bc = sharing::compression_ratio(big, c.kind, 400, 4096, 11008);
        json ref = {{"listing", sharing::format_groups(big)},
                    {"tau", sharing::stored_ratio(big)},
                    {"tau_percent", percent(sharing::stored_ratio(big))},
                    {"s_exact_r400", bc.exact},
                    {"s_percent_r400", percent(bc.exact)},
                    {"s_linearized_r400", bc.linearized}};
        if (s.kind == sharing::ScheduleKind::More) {
            ref["note"] =
                "the published More listing stores 9 of 32 layers (tau 28.1%); the stored-ratio table states "
                "25% (8 layers, 24 targets)";
            auto nominal = big;
            nominal.groups[1].targets.push_back(12);
            ref["nominal_tau"] = 0.25;
            ref["nominal_s_exact_r400"] = sharing::compression_ratio(nominal, c.kind, 400, 4096, 11008).exact;
        }
        json mr = json::object();
        for (auto k : {sharing::TransformKind::G0, sharing::TransformKind::G1, sharing::TransformKind::G2,
                       sharing::TransformKind::G3}) {
            mr[sharing::transform_name(k)] = sharing::matched_rank(k, 400, 4096, 11008);
        }
        ref["matched_ranks_r400"] = mr;
        rep["llama2_7b"] = ref;
    }
    if (c.schedule.rfind("custom=", 0) == 0) {
        rep["inputs"] = {{"schedule", model::git_blob_sha1_file(c.schedule.substr(7))}};
    }
    return finish(a, "plan", rep);
}

json cmd_slw(const ExperimentConfig& c) {
    const Artifacts a = prepare(c);
    const auto base = load_base(a);
    check_model_matches(c, base);
    const auto s = resolve_schedule(c.schedule, base.config.n_layers);
    const std::size_t r = c.effective_rank();
    const LoadedCorpus corpus = load_corpus(c);
    const auto init = sharing::init_recovery(c.kind, s, r, base.config.d_model, base.config.d_hidden, c.seed);
    const auto cache = recovery::capture_activations(base, s, corpus.train, c.slw.capture_fraction, c.seed);
    recovery::SlwAllResult res;
    try {
        res = recovery::slw_all(base, cache, init, c.slw);
    } catch (const std::runtime_error& e) {
        throw CliError("training", e.what());
    }
    recovery::save_recovery(res.params, a.slw());

    std::string csv = "layer,step,loss\n";
    json layers = json::array();
    for (const auto& [l, lr] : res.per_layer) {
        for (std::size_t i = 0; i < lr.losses.size(); ++i) {
            csv += std::to_string(l) + "," + std::to_string(i + 1) + "," + fmt(lr.losses[i]) + "\n";
        }
        layers.push_back({{"layer", l},
                          {"reference", *s.reference_of(l)},
                          {"initial_mse", lr.initial_loss},
                          {"final_mse", lr.final_loss}});
    }
    write_text(a.dir / "slw_loss.csv", csv);

    const auto mv = model::ModelVars::constants(base);
    const auto eval = data::token_stream(corpus.eval);
    json rep = header("slw", c);
    rep["inputs"] = {{"corpus", corpus.hash}, {"checkpoint", model::git_blob_sha1_file(a.base())}};
    rep["outputs"] = {{"recovery", model::git_blob_sha1_file(a.slw())}};
    rep["rank"] = r;
    rep["capture_rows"] = cache.inputs.empty() ? 0 : cache.inputs.begin()->second.rows();
    rep["recovery_parameters"] = res.params.parameter_count();
    rep["layers"] = layers;
    rep["label"] = "SHARP (w/o f.t.)";
    rep["perplexity"] = sharing::materialize_view(mv, s, res.params, c.kind).perplexity(eval).perplexity;
    return finish(a, "slw", rep);
}

json cmd_sft(const ExperimentConfig& c, bool drop_baseline) {
    const Artifacts a = prepare(c);
    const auto base = load_base(a);
    check_model_matches(c, base);
    const auto s = resolve_schedule(c.schedule, base.config.n_layers);
    const std::size_t r = c.effective_rank();
    const std::size_t d1 = base.config.d_model, d2 = base.config.d_hidden;
    const LoadedCorpus corpus = load_corpus(c);

    json inputs = {{"corpus", corpus.hash}, {"checkpoint", model::git_blob_sha1_file(a.base())}};
    sharing::RecoveryParams init;
    std::string label;
    if (drop_baseline) {
        init = sharing::init_reference_free(s, r, d1, d2, c.seed);
        label = "drop baseline + SFT";
    } else if (c.only_sft) {
        init = sharing::init_recovery(c.kind, s, r, d1, d2, c.seed);
        label = "SHARP (only SFT)";
    } else {
        init = load_params(a.slw(), "slw");
        if (!(init.schedule == s) || init.kind != c.kind || init.rank != r) {
            throw CliError("mismatch", a.slw().string() + " was produced with another schedule, kind or rank");
        }
        inputs["recovery"] = model::git_blob_sha1_file(a.slw());
        label = "SHARP";
    }
    if (c.sft.full_lora) label += " + full LoRA";

    recovery::SftResult res;
    try {
        res = recovery::sft(base, init, corpus.train, c.sft);
    } catch (const std::runtime_error& e) {
        throw CliError("training", e.what());
    }
    const fs::path out = drop_baseline ? a.drop_sft() : a.sft();
    recovery::save_recovery(res.params, out);
    const std::string stem = drop_baseline ? "drop_sft" : "sft";
    write_text(a.dir / (stem + "_loss.csv"), losses_csv(res.losses));

    const auto mv = model::ModelVars::constants(base);
    const auto eval = data::token_stream(corpus.eval);
    json rep = header(drop_baseline ? "sft-drop" : "sft", c);
    rep["inputs"] = inputs;
    rep["outputs"] = {{"recovery", model::git_blob_sha1_file(out)}};
    rep["label"] = label;
    rep["rank"] = r;
    rep["steps"] = res.losses.size();
    rep["recovery_parameters"] = res.params.parameter_count();
    rep["first_loss"] = res.losses.empty() ? 0.0 : res.losses.front();
    rep["final_loss"] = res.losses.empty() ? 0.0 : res.losses.back();
    rep["perplexity"] = sharing::materialize_view(mv, s, res.params, res.params.kind).perplexity(eval).perplexity;
    return finish(a, stem, rep);
}

json cmd_eval(const ExperimentConfig& c) {
    const Artifacts a = prepare(c);
    const auto base = load_base(a);
    check_model_matches(c, base);
    const auto s = resolve_schedule(c.schedule, base.config.n_layers);
    const LoadedCorpus corpus = load_corpus(c);
    const auto mv = model::ModelVars::constants(base);
    const auto eval = data::token_stream(corpus.eval);

    json inputs = {{"corpus", corpus.hash}, {"checkpoint", model::git_blob_sha1_file(a.base())}};
    json rows = json::array();
    const double p0 = model::perplexity(mv, eval).perplexity;
    auto add = [&](const std::string& label, const sharing::SharedModelView& v) {
        const double ppl = v.perplexity(eval).perplexity;
        rows.push_back({{"label", label},
                        {"perplexity", ppl},
                        {"relative_to_baseline", ppl / p0},
                        {"stored_parameters", v.stored_parameter_count()}});
    };
    rows.push_back({{"label", "baseline"},
                    {"perplexity", p0},
                    {"relative_to_baseline", 1.0},
                    {"stored_parameters", model::parameter_count(base.config)}});
    add("direct sharing", sharing::direct_view(mv, s));
    add("drop baseline", sharing::drop_view(mv, s));
    auto add_params = [&](const fs::path& p, const char* key, const std::string& label) {
        if (!fs::exists(p)) return;
        const auto rp = load_params(p, "");
        if (!(rp.schedule == s)) throw CliError("mismatch", p.string() + " belongs to another schedule");
        inputs[key] = model::git_blob_sha1_file(p);
        add(label, sharing::materialize_view(mv, s, rp, rp.kind));
    };
    add_params(a.slw(), "slw", "SHARP (w/o f.t.)");
    add_params(a.sft(), "sft", c.only_sft ? "SHARP (only SFT)" : "SHARP");
    add_params(a.drop_sft(), "drop_sft", "drop baseline + SFT");

    json rep = header("eval", c);
    rep["inputs"] = inputs;
    rep["schedule"] = sharing::format_groups(s);
    rep["rows"] = rows;
    if (fs::exists(a.report("pretrain"))) {
        std::ifstream in(a.report("pretrain"));
        const json pre = json::parse(in, nullptr, false);
        if (pre.is_object() && pre.contains("baseline_perplexity")) rep["recorded_p0"] = pre["baseline_perplexity"];
    }
    std::string csv = "label,perplexity,relative_to_baseline,stored_parameters\n";
    for (const auto& r : rows) {
        csv += r["label"].get<std::string>() + "," + fmt(r["perplexity"].get<double>()) + "," +
               fmt(r["relative_to_baseline"].get<double>()) + "," +
               std::to_string(r["stored_parameters"].get<std::size_t>()) + "\n";
    }
    write_text(a.dir / "eval.csv", csv);
    return finish(a, "eval", rep);
}

json cmd_probe(const ExperimentConfig& c, const std::string& probe) {
    probes::ProbeKind kind;
    try {
        kind = probes::probe_from_name(probe);
    } catch (const std::invalid_argument& e) {
        throw CliError("usage", e.what());
    }
    const Artifacts a = prepare(c);
    const auto base = load_base(a);
    const auto mv = model::ModelVars::constants(base);
    probes::ProbeReport rep;
    json inputs = {{"checkpoint", model::git_blob_sha1_file(a.base())}};
    if (kind == probes::ProbeKind::RelativeError) {
        rep = probes::relative_error_report(base);
    } else {
        const LoadedCorpus corpus = load_corpus(c);
        inputs["corpus"] = corpus.hash;
        const auto eval = data::token_stream(corpus.eval);
        rep = kind == probes::ProbeKind::Replace ? probes::replace_sweep(mv, eval)
                                                 : probes::zero_out_sensitivity(mv, eval);
    }
    rep.config = c.to_json();
    const std::string stem = std::string("probe_") + probes::probe_name(kind);
    write_text(a.dir / (stem + ".csv"), rep.to_csv());
    json out = rep.to_json();
    out["command"] = "probe";
    out["inputs"] = inputs;
    return finish(a, stem, out);
}

json cmd_latency(const ExperimentConfig& c) {
    const Artifacts a = prepare(c);
    const auto desc = c.latency_model == "toy" ? latency::ModelDescription::from_config(c.model)
                                               : latency::ModelDescription::llama2_7b();
    latency::CostModel cm = latency::CostModel::mobile_llama2_7b();
    json inputs = json::object();
    if (!c.cost_model.empty()) {
        std::ifstream in(c.cost_model);
        if (!in) throw CliError("missing-input", "cost model not found: " + c.cost_model);
        try {
            cm = latency::CostModel::from_json(json::parse(in));
        } catch (const json::exception& e) {
            throw CliError("config", "invalid cost model " + c.cost_model + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw CliError("config", e.what());
        }
        inputs["cost_model"] = model::git_blob_sha1_file(c.cost_model);
    }
    const auto s = resolve_schedule(c.schedule, desc.n_layers);
    const std::size_t r = c.no_lora ? 0 : c.effective_rank();
    const auto rep = latency::latency_report(desc, s, c.kind, r, cm);
    write_text(a.dir / "latency.csv", rep.to_csv());
    json out = header("latency", c);
    out.update(rep.to_json());
    out["command"] = "latency";
    out["inputs"] = inputs;
    return finish(a, "latency", out);
}

}  // namespace sharp::cli
