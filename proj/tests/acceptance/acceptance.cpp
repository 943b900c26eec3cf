// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when any
// criterion fails.

#include <malloc.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sharp/cli/commands.h"
#include "sharp/cli/config.h"
#include "sharp/data/corpus.h"
#include "sharp/data/synthetic.h"
#include "sharp/latency/latency.h"
#include "sharp/probes/probes.h"
#include "sharp/recovery/slw.h"
#include "sharp/sharing/accounting.h"
#include "sharp/sharing/view.h"
#include "sharp/tensorkernel/gradcheck.h"
#include "sharp/tensorkernel/ops.h"

#ifndef SHARP_CLI_PATH
#define SHARP_CLI_PATH "sharp"
#endif
#ifndef SHARP_WORK_DIR
#define SHARP_WORK_DIR "acceptance_work"
#endif

using namespace sharp;
using sharing::ScheduleKind;
using sharing::TransformKind;
namespace fs = std::filesystem;

namespace {

constexpr ScheduleKind kBuiltins[] = {ScheduleKind::Next, ScheduleKind::Next2, ScheduleKind::Back,
                                      ScheduleKind::Front, ScheduleKind::More,  ScheduleKind::Max,
                                      ScheduleKind::Ori};
constexpr TransformKind kKinds[] = {TransformKind::G0, TransformKind::G1, TransformKind::G2, TransformKind::G3};

constexpr std::size_t kLlamaD1 = 4096;
constexpr std::size_t kLlamaD2 = 11008;

struct Outcome {
    bool pass = true;
    std::vector<std::string> lines;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            lines.push_back("  fail: " + what);
        }
    }
    void info(const std::string& what) { lines.push_back("  " + what); }
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- 1

void schedule_arithmetic(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::map<ScheduleKind, long> tau_expected = {{ScheduleKind::Next, 56}, {ScheduleKind::Next2, 44},
                                                       {ScheduleKind::Back, 38}, {ScheduleKind::Front, 38},
                                                       {ScheduleKind::More, 25}, {ScheduleKind::Max, 16}};
    for (auto [k, want] : tau_expected) {
        const auto s = sharing::build_schedule(k, 32);
        const long got = std::lround(100.0 * sharing::stored_ratio(s));
        if (k == ScheduleKind::More) {
            // The published listing leaves layer 12 unassigned and stores 9
            // layers; the stored-ratio figure counts 8 (X = 24). Both are reported.
            auto nominal = s;
            nominal.groups[1].targets.push_back(12);
            sharing::validate(nominal, true);
            const long nom = std::lround(100.0 * sharing::stored_ratio(nominal));
            o.info(fmt("more: listing %s gives tau %ld%% (X=%zu); nominal X=24 gives %ld%%; discrepancy reported",
                       sharing::format_groups(s).c_str(), got, s.target_count(), nom));
            o.check(s.target_count() == 23 && got == 28, "more listing should keep 9 of 32 layers");
            o.check(nom == want, fmt("more nominal tau %ld vs %ld", nom, want));
        } else {
            o.check(got == want, fmt("%s tau %ld%% vs %ld%%", sharing::schedule_name(k), got, want));
        }
    }

    const std::map<ScheduleKind, long> s_expected = {
        {ScheduleKind::Next, 62}, {ScheduleKind::Back, 46}, {ScheduleKind::More, 35}};
    for (auto [k, want] : s_expected) {
        auto s = sharing::build_schedule(k, 32);
        if (k == ScheduleKind::More) {
            const double listing =
                sharing::compression_ratio(s, TransformKind::G0, 400, kLlamaD1, kLlamaD2).exact * 100.0;
            o.info(fmt("more: s(r=400) from listing %.2f%%, compared at nominal X=24", listing));
            s.groups[1].targets.push_back(12);
            sharing::validate(s, true);
        }
        const double got = sharing::compression_ratio(s, TransformKind::G0, 400, kLlamaD1, kLlamaD2).exact * 100.0;
        o.info(fmt("%s s(r=400) = %.2f%% (expect %ld%%)", sharing::schedule_name(k), got, want));
        o.check(std::fabs(got - static_cast<double>(want)) <= 1.0,
                fmt("%s s %.2f outside %ld +- 1", sharing::schedule_name(k), got, want));
    }

    double worst = 0.0;
    for (auto k : kBuiltins) {
        const auto s = sharing::build_schedule(k, 32);
        for (std::size_t r = 1; r <= 512; ++r) {
            const auto c = sharing::compression_ratio(s, TransformKind::G0, r, kLlamaD1, kLlamaD2);
            worst = std::max(worst, std::fabs(c.linearized - c.exact) / c.exact);
        }
    }
    o.info(fmt("linearized vs exact s, r in 1..512, all schedules: max relative gap %.4f", worst));
    o.check(worst < 0.05, "linearized approximation off by more than 5%");

    const std::size_t m1 = sharing::matched_rank(TransformKind::G1, 400, kLlamaD1, kLlamaD2);
    const std::size_t m2 = sharing::matched_rank(TransformKind::G2, 400, kLlamaD1, kLlamaD2);
    const std::size_t m3 = sharing::matched_rank(TransformKind::G3, 400, kLlamaD1, kLlamaD2);
    o.info(fmt("matched ranks from 400: %zu/%zu/%zu", m1, m2, m3));
    o.check(m1 == 163 && m2 == 259 && m3 == 200, "matched ranks differ from 163/259/200");

    const double dt = seconds_since(t0);
    o.check(dt < 1.0, fmt("runtime %.3f s", dt));
}

// ---------------------------------------------------------------- 2

tk::Tensor<double> rand_t(tk::Shape s, std::mt19937_64& rng, double sd = 1.0) {
    std::normal_distribution<double> nd(0.0, sd);
    auto t = tk::Tensor<double>::zeros(std::move(s));
    for (double& v : t.data) v = nd(rng);
    return t;
}

void gradient_suite(Outcome& o) {
    using tk::Var;
    using In = std::span<const Var<double>>;
    constexpr int kInstances = 20;
    constexpr double kTol = 1e-4;
    std::mt19937_64 rng(2026);
    auto dim = [&](std::size_t lo, std::size_t hi) {
        return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
    };
    // Each op is reduced to a scalar through a random projection so every
    // output element contributes to the checked gradient.
    auto project = [](const Var<double>& y, const Var<double>& w) { return tk::sum(tk::mul(y, w)); };

    struct Op {
        std::string name;
        std::function<std::pair<tk::ScalarFn, std::vector<tk::Tensor<double>>>()> make;
    };
    std::vector<Op> ops;
    ops.push_back({"matmul", [&] {
                       const auto m = dim(1, 5), k = dim(1, 5), n = dim(1, 5);
                       return std::pair{tk::ScalarFn([=](In in) { return project(tk::matmul(in[0], in[1]), in[2]); }),
                                        std::vector{rand_t({m, k}, rng), rand_t({k, n}, rng), rand_t({m, n}, rng)}};
                   }});
    ops.push_back({"transpose", [&] {
                       const auto m = dim(1, 5), n = dim(1, 5);
                       return std::pair{tk::ScalarFn([=](In in) { return project(tk::transpose(in[0]), in[1]); }),
                                        std::vector{rand_t({m, n}, rng), rand_t({n, m}, rng)}};
                   }});
    for (const char* name : {"add", "sub", "mul"}) {
        const std::string op = name;
        ops.push_back({op, [&, op] {
                           const auto m = dim(1, 5), n = dim(1, 5);
                           auto f = [op](In in) {
                               const auto y = op == "add"   ? tk::add(in[0], in[1])
                                              : op == "sub" ? tk::sub(in[0], in[1])
                                                            : tk::mul(in[0], in[1]);
                               return tk::sum(tk::mul(y, in[2]));
                           };
                           return std::pair{tk::ScalarFn(f), std::vector{rand_t({m, n}, rng), rand_t({m, n}, rng),
                                                                          rand_t({m, n}, rng)}};
                       }});
    }
    ops.push_back({"scale", [&] {
                       const auto m = dim(1, 5), n = dim(1, 5);
                       return std::pair{tk::ScalarFn([=](In in) { return project(tk::scale(in[0], in[1]), in[2]); }),
                                        std::vector{rand_t({m, n}, rng), rand_t({1}, rng), rand_t({m, n}, rng)}};
                   }});
    ops.push_back({"silu", [&] {
                       const auto m = dim(1, 5), n = dim(1, 5);
                       return std::pair{tk::ScalarFn([=](In in) { return project(tk::silu(in[0]), in[1]); }),
                                        std::vector{rand_t({m, n}, rng, 2.0), rand_t({m, n}, rng)}};
                   }});
    ops.push_back({"rmsnorm", [&] {
                       const auto m = dim(1, 5), n = dim(2, 6);
                       return std::pair{tk::ScalarFn([=](In in) { return project(tk::rmsnorm(in[0], in[1]), in[2]); }),
                                        std::vector{rand_t({m, n}, rng), rand_t({n}, rng), rand_t({m, n}, rng)}};
                   }});
    ops.push_back({"embedding", [&] {
                       const auto v = dim(2, 6), d = dim(1, 4), n = dim(1, 6);
                       std::vector<std::int32_t> ids(n);
                       for (auto& id : ids) id = static_cast<std::int32_t>(rng() % v);
                       return std::pair{
                           tk::ScalarFn([=](In in) { return project(tk::embedding(in[0], ids), in[1]); }),
                           std::vector{rand_t({v, d}, rng), rand_t({n, d}, rng)}};
                   }});
    ops.push_back({"causal_attention", [&] {
                       const auto b = dim(1, 2), t = dim(1, 4), h = dim(1, 2), dh = dim(1, 3);
                       const auto rows = b * t, cols = h * dh;
                       return std::pair{
                           tk::ScalarFn([=](In in) {
                               return project(tk::causal_attention(in[0], in[1], in[2], b, t, h), in[3]);
                           }),
                           std::vector{rand_t({rows, cols}, rng), rand_t({rows, cols}, rng), rand_t({rows, cols}, rng),
                                       rand_t({rows, cols}, rng)}};
                   }});
    ops.push_back({"cross_entropy_mean", [&] {
                       const auto n = dim(1, 6), v = dim(2, 7);
                       std::vector<std::int32_t> targets(n);
                       for (auto& t : targets) t = static_cast<std::int32_t>(rng() % v);
                       std::vector<std::uint8_t> mask(n);
                       for (auto& m : mask) m = static_cast<std::uint8_t>(rng() % 2);
                       mask[rng() % n] = 1;
                       if (rng() % 2) mask.clear();
                       return std::pair{
                           tk::ScalarFn([=](In in) { return tk::cross_entropy_mean(in[0], targets, mask); }),
                           std::vector{rand_t({n, v}, rng, 2.0)}};
                   }});
    ops.push_back({"mse", [&] {
                       const auto m = dim(1, 5), n = dim(1, 5);
                       return std::pair{tk::ScalarFn([](In in) { return tk::mse(in[0], in[1]); }),
                                        std::vector{rand_t({m, n}, rng), rand_t({m, n}, rng)}};
                   }});
    ops.push_back({"sum", [&] {
                       const auto m = dim(1, 5), n = dim(1, 5);
                       return std::pair{tk::ScalarFn([](In in) { return tk::sum(tk::mul(in[0], in[0])); }),
                                        std::vector{rand_t({m, n}, rng)}};
                   }});

    double overall = 0.0;
    for (auto& op : ops) {
        double worst = 0.0;
        std::size_t checked = 0;
        for (int i = 0; i < kInstances; ++i) {
            auto [f, point] = op.make();
            const auto r = tk::grad_check(f, point, 1e-4);
            worst = std::max(worst, r.max_rel_error);
            checked += r.checked;
        }
        overall = std::max(overall, worst);
        o.check(worst < kTol && checked > 0, fmt("%s max rel error %.3e", op.name.c_str(), worst));
    }
    o.info(fmt("%zu ops x %d instances, float64, h=1e-4: max relative error %.3e", ops.size(), kInstances, overall));
}

// ---------------------------------------------------------------- 3

void realizability(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    constexpr std::size_t kRows = 65536;
    constexpr std::size_t kRank = 8;
    constexpr std::size_t kLayer = 4;
    const model::ModelConfig cfg;
    const auto w = model::init_model(cfg);
    const auto& ref = w.layer(3);
    const auto s = sharing::custom_schedule(cfg.n_layers, {{3, {kLayer}}});

    std::mt19937_64 rng(7);
    std::normal_distribution<float> nd(0.0f, 1.0f);
    auto x = tk::Tensor<float>::zeros({kRows, cfg.d_model});
    for (float& v : x.data) v = nd(rng);

    // Ground-truth factors at rank r: alpha* = 0.8, dense A* and B*, and the
    // kind-specific factors perturbed by 30% of their magnitude.
    auto synthesize = [&](TransformKind kind, const sharing::RecoveryParams& fit0,
                          const sharing::RecoveryParams* extras_from) {
        model::LayerWeights target = ref;
        for (auto r : model::kMlpRoles) {
            auto f = fit0.targets.at({kLayer, r});
            if (extras_from) {
                f.extra1 = extras_from->targets.at({kLayer, r}).extra1;
                f.extra2 = extras_from->targets.at({kLayer, r}).extra2;
            } else {
                for (float& v : f.extra1.data) v += nd(rng) * 0.3f * std::fabs(v);
                for (float& v : f.extra2.data) v += nd(rng) * 0.3f * std::fabs(v);
            }
            f.alpha.data[0] = 0.8f;
            for (float& v : f.a.data) v = nd(rng) * 0.05f;
            for (float& v : f.b.data) v = nd(rng) * 0.05f;
            target.mlp(r) = sharing::apply_transform(kind, ref.mlp(r), f);
        }
        return target;
    };
    auto fit = [&](TransformKind kind, const model::LayerWeights& target, const sharing::RecoveryParams& fit0) {
        std::map<model::Role, sharing::ProjectionFactors> init;
        for (auto r : model::kMlpRoles) init[r] = fit0.targets.at({kLayer, r});
        return recovery::slw_fit(ref, target, x, kind, init, recovery::SlwConfig{}, kLayer);
    };

    for (auto kind : kKinds) {
        const auto fit0 = sharing::init_recovery(kind, s, kRank, cfg.d_model, cfg.d_hidden, 0);
        const auto res = fit(kind, synthesize(kind, fit0, nullptr), fit0);
        o.info(fmt("%s: block MSE %.3e -> %.3e in %zu steps", sharing::transform_name(kind), res.initial_loss,
                   res.final_loss, res.losses.size()));
        o.check(res.final_loss < 1e-6, fmt("%s final MSE %.3e", sharing::transform_name(kind), res.final_loss));
    }
    const double dt = seconds_since(t0);
    o.check(dt < 120.0, fmt("runtime %.1f s", dt));
    o.info(fmt("runtime %.1f s", dt));

    // Not part of the criterion: kind-specific factors drawn independently of
    // the fit's starting point.
    for (auto kind : {TransformKind::G1, TransformKind::G2, TransformKind::G3}) {
        const auto fit0 = sharing::init_recovery(kind, s, kRank, cfg.d_model, cfg.d_hidden, 0);
        const auto other = sharing::init_recovery(kind, s, kRank, cfg.d_model, cfg.d_hidden, 99);
        const auto res = fit(kind, synthesize(kind, fit0, &other), fit0);
        o.info(fmt("info %s with independently drawn extra factors: %.3e -> %.3e", sharing::transform_name(kind),
                   res.initial_loss, res.final_loss));
    }
}

// ---------------------------------------------------------------- 4, 5, 6

cli::ExperimentConfig toy_config(const fs::path& out) {
    cli::ExperimentConfig c;
    c.out = out.string();
    c.propagate_seed();
    return c;
}

std::map<std::string, double> eval_rows(const cli::ExperimentConfig& c) {
    std::map<std::string, double> m;
    const auto rep = cli::cmd_eval(c);
    for (const auto& row : rep["rows"]) m[row["label"].get<std::string>()] = row["perplexity"].get<double>();
    return m;
}

fs::path work_dir() {
    const fs::path d = fs::absolute(SHARP_WORK_DIR);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

fs::path sibling(const fs::path& root, const std::string& name) {
    const fs::path d = root / name;
    fs::create_directories(d);
    fs::copy_file(root / "base" / "base.shrp", d / "base.shrp", fs::copy_options::overwrite_existing);
    fs::copy_file(root / "base" / "pretrain.json", d / "pretrain.json", fs::copy_options::overwrite_existing);
    return d;
}

struct PipelineState {
    fs::path root;
    double g0_sharp = 0.0;
    double p0 = 0.0;
};

void pipeline_ordering(Outcome& o, PipelineState& st) {
    const auto t0 = std::chrono::steady_clock::now();
    auto c = toy_config(st.root / "base");
    const auto pre = cli::cmd_pretrain(c);
    o.info(fmt("pretrained N=%zu d1=%zu d2=%zu on %zu bytes, %zu steps in %.0f s", c.model.n_layers,
               c.model.d_model, c.model.d_hidden, c.corpus.synthetic_bytes, c.pretrain.steps, seconds_since(t0)));
    cli::cmd_slw(c);
    cli::cmd_sft(c);
    cli::cmd_sft(c, true);
    auto rows = eval_rows(c);
    const double p0 = rows.at("baseline"), direct = rows.at("direct sharing"), slw = rows.at("SHARP (w/o f.t.)"),
                 sharp = rows.at("SHARP"), drop = rows.at("drop baseline"), drop_sft = rows.at("drop baseline + SFT");
    st.p0 = p0;
    st.g0_sharp = sharp;
    o.info(fmt("schedule %s", sharing::format_groups(cli::resolve_schedule(c.schedule, 12)).c_str()));
    o.info(fmt("baseline %.4f | direct %.4f | SLW %.4f | SLW+SFT %.4f | drop %.4f | drop+SFT %.4f", p0, direct, slw,
               sharp, drop, drop_sft));
    o.check(direct > slw, "direct sharing should be worse than SLW");
    o.check(slw > sharp, "SLW should be worse than SLW+SFT");
    o.check(sharp <= 1.25 * p0, fmt("SLW+SFT %.4f above 1.25 x baseline %.4f", sharp, 1.25 * p0));
    o.check(sharp <= drop_sft, "SLW+SFT should not be worse than drop baseline + SFT");
    const double dt = seconds_since(t0);
    o.info(fmt("runtime %.0f s", dt));
    o.check(dt < 1800.0, fmt("runtime %.0f s", dt));
    (void)pre;
}

void rank_monotonicity(Outcome& o, const PipelineState& st) {
    std::vector<double> ppl;
    for (std::size_t r : {2, 8, 32}) {
        auto c = toy_config(sibling(st.root, "rank" + std::to_string(r)));
        c.rank = r;
        cli::cmd_slw(c);
        ppl.push_back(eval_rows(c).at("SHARP (w/o f.t.)"));
    }
    o.info(fmt("SLW-only perplexity r=2 %.4f, r=8 %.4f, r=32 %.4f", ppl[0], ppl[1], ppl[2]));
    o.check(ppl[1] <= ppl[0] && ppl[2] <= ppl[1], "perplexity increases with rank");
}

void transform_equivalence(Outcome& o, const PipelineState& st) {
    std::map<TransformKind, double> ppl = {{TransformKind::G0, st.g0_sharp}};
    o.info(fmt("g0 r=8: %.4f", st.g0_sharp));
    for (auto kind : {TransformKind::G1, TransformKind::G2, TransformKind::G3}) {
        auto c = toy_config(sibling(st.root, sharing::transform_name(kind)));
        c.kind = kind;
        c.matched_from = 8;
        cli::cmd_slw(c);
        cli::cmd_sft(c);
        ppl[kind] = eval_rows(c).at("SHARP");
        o.info(fmt("%s r=%zu: %.4f", sharing::transform_name(kind), c.effective_rank(), ppl[kind]));
    }
    double lo = 1e300, hi = 0.0;
    for (auto [k, v] : ppl) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    o.info(fmt("spread (max - min) / min = %.2f%%", 100.0 * (hi - lo) / lo));
    o.check((hi - lo) / lo <= 0.10, "perplexities differ by more than 10%");
}

// ---------------------------------------------------------------- 7

void view_equivalence(Outcome& o) {
    const model::ModelConfig cfg;
    const auto w = model::init_model(cfg);
    const auto m = model::ModelVars::constants(w);
    std::size_t compared = 0, mismatched = 0;
    for (auto sk : kBuiltins) {
        const auto s = sharing::build_schedule(sk, cfg.n_layers);
        for (auto kind : kKinds) {
            auto rp = sharing::init_recovery(kind, s, 8, cfg.d_model, cfg.d_hidden, 5);
            std::mt19937_64 rng(11);
            std::normal_distribution<float> nd(0.0f, 0.05f);
            for (auto& [key, f] : rp.targets) {
                f.alpha.data[0] = 0.7f;
                for (float& v : f.b.data) v = nd(rng);
            }
            const auto view = sharing::materialize_view(m, s, rp, kind);
            const auto explicit_m = model::ModelVars::constants(sharing::materialize_explicit(w, rp));
            for (int i = 0; i < 100; ++i) {
                const std::size_t batch = 1 + rng() % 2, seq = 1 + rng() % cfg.max_seq_len;
                std::vector<std::int32_t> toks(batch * seq);
                for (auto& t : toks) t = static_cast<std::int32_t>(rng() % cfg.vocab_size);
                ++compared;
                if (!tk::bitwise_equal(view.forward(toks, batch, seq).logits.value(),
                                       model::forward(explicit_m, toks, batch, seq).logits.value())) {
                    ++mismatched;
                }
            }
        }
    }
    o.info(fmt("%zu forwards over 7 schedules x 4 kinds, %zu mismatched", compared, mismatched));
    o.check(mismatched == 0, "view logits differ from explicit materialization");
}

// ---------------------------------------------------------------- 8

void storage_oracle(Outcome& o) {
    latency::CostModel cm = latency::CostModel::mobile_llama2_7b();
    std::size_t cases = 0;
    for (std::size_t n_layers : {12, 32}) {
        model::ModelConfig cfg;
        cfg.n_layers = n_layers;
        const auto w = model::init_model(cfg);
        const auto desc = latency::ModelDescription::from_config(cfg);
        for (auto sk : kBuiltins) {
            const auto s = sharing::build_schedule(sk, n_layers);
            for (auto kind : kKinds) {
                for (std::size_t r : {0, 1, 8, 32}) {
                    // Count the tensors a shared checkpoint would hold.
                    std::size_t params = 0;
                    for (const auto& [name, t] : w.named()) {
                        const bool mlp = name.find(".mlp.") != std::string::npos;
                        const std::size_t layer =
                            mlp ? std::stoul(name.substr(name.find('.') + 1, name.find('.', 7) - name.find('.') - 1))
                                : 0;
                        if (!mlp || !s.is_target(layer)) params += t->size();
                    }
                    if (r > 0) {
                        for (const auto& [key, f] : sharing::init_recovery(kind, s, r, cfg.d_model, cfg.d_hidden, 0)
                                                        .targets) {
                            params += f.alpha.size() + f.a.size() + f.b.size() + f.extra1.size() + f.extra2.size();
                        }
                    }
                    const double want = cm.bytes_per_param * static_cast<double>(params) +
                                        cm.overhead_bytes_per_layer * static_cast<double>(s.stored_layers());
                    const double got = latency::stored_bytes(desc, s, kind, r, cm);
                    ++cases;
                    o.check(got == want, fmt("N=%zu %s %s r=%zu: %.17g vs %.17g", n_layers,
                                             sharing::schedule_name(sk), sharing::transform_name(kind), r, got, want));
                }
            }
        }
    }
    o.info(fmt("%zu schedule/kind/rank cases match the tensor enumeration", cases));

    latency::CostModel plain;
    for (const auto& desc : {latency::ModelDescription::llama2_7b(),
                             latency::ModelDescription::from_config(model::ModelConfig{})}) {
        for (auto sk : kBuiltins) {
            const auto s = sharing::build_schedule(sk, desc.n_layers);
            const auto rep = latency::latency_report(desc, s, TransformKind::G0, 0, plain);
            const double closed = static_cast<double>(s.target_count() * desc.mlp_parameters_per_layer()) /
                                  static_cast<double>(desc.total_parameters());
            o.check(std::fabs(rep.savings.model_size - closed) <= 1e-12,
                    fmt("%s %s r=0 saving %.15f vs %.15f", desc.name.c_str(), sharing::schedule_name(sk),
                        rep.savings.model_size, closed));
            if (desc.n_layers == 32 && sk == ScheduleKind::Next) {
                o.info(fmt("llama2-7b next r=0: size saving %.4f = %zu x 3 d1 d2 / %zu", closed, s.target_count(),
                           desc.total_parameters()));
            }
        }
    }
}

// ---------------------------------------------------------------- 9

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        files[fs::relative(e.path(), dir).string()] = ss.str();
    }
    return files;
}

void cli_determinism(Outcome& o, const fs::path& root) {
    const fs::path dir = root / "cli";
    fs::create_directories(dir);
    cli::ExperimentConfig c;
    c.corpus.synthetic_bytes = 120000;
    c.corpus.eval_fraction = 0.05;
    c.model.n_layers = 8;
    c.model.d_model = 32;
    c.model.d_hidden = 86;
    c.model.n_heads = 2;
    c.model.max_seq_len = 32;
    c.pretrain.steps = 60;
    c.pretrain.batch_size = 8;
    c.sft.max_steps = 20;
    c.sft.batch_size = 8;
    c.sft.max_seq_len = 32;
    c.rank = 4;
    c.out = (dir / "out").string();
    std::ofstream(dir / "config.json") << c.to_json().dump(2) << "\n";

    const std::vector<std::string> commands = {
        "pretrain",      "plan", "slw", "sft", "sft --drop-baseline", "eval", "probe --probe replace",
        "probe --probe relative-error", "probe --probe zero-out", "latency"};
    auto run_all = [&] {
        bool ok = true;
        for (const auto& cmd : commands) {
            const std::string line = std::string(SHARP_CLI_PATH) + " " + cmd + " --config " +
                                     (dir / "config.json").string() + " > /dev/null";
            if (std::system(line.c_str()) != 0) {
                o.check(false, "command failed: " + cmd);
                ok = false;
            }
        }
        return ok;
    };
    if (!run_all()) return;
    const auto first = snapshot(dir / "out");
    if (!run_all()) return;
    const auto second = snapshot(dir / "out");
    o.info(fmt("%zu commands run twice, %zu artifacts compared", commands.size(), first.size()));
    o.check(first.size() >= 20, "fewer artifacts than expected");
    for (const auto& [name, bytes] : first) {
        auto it = second.find(name);
        o.check(it != second.end() && it->second == bytes, "artifact differs on rerun: " + name);
    }
}

// ---------------------------------------------------------------- 10

void probe_properties(Outcome& o) {
    const model::ModelConfig cfg;
    const auto stream = data::tokenize(data::synthetic_corpus(4000, 12));

    auto tied = model::init_model(cfg);
    for (auto r : model::kMlpRoles) tied.layer(6).mlp(r) = tied.mlp(5, r);
    const auto tm = model::ModelVars::constants(tied);
    const double base = model::perplexity(tm, stream).perplexity;
    const double replaced = probes::replace_probe(tm, 5, 6, stream);
    o.info(fmt("tied layers 5,6: baseline %.6f, replaced %.6f", base, replaced));
    o.check(replaced - base == 0.0, "replace_probe delta on tied layers is not zero");

    auto w = model::init_model(cfg);
    for (std::size_t l = 2; l <= cfg.n_layers; ++l) {
        for (auto r : model::kMlpRoles) w.layer(l).mlp(r) = w.mlp(1, r);
    }
    const auto zero = probes::relative_error_report(w);
    bool all_zero = true;
    for (const auto& row : zero.rows) all_zero = all_zero && row.value == 0.0;
    o.check(all_zero && zero.means.at("combined") == 0.0, "relative error of tied layers is not 0");

    for (std::size_t l = 2; l <= cfg.n_layers; ++l) {
        for (auto r : model::kMlpRoles) {
            w.layer(l).mlp(r) = w.mlp(l - 1, r);
            for (float& v : w.layer(l).mlp(r).data) v *= 2.0f;
        }
    }
    const auto doubled = probes::relative_error_report(w);
    bool all_one = true;
    for (const auto& row : doubled.rows) all_one = all_one && row.value == 1.0;
    o.check(all_one && doubled.means.at("combined") == 1.0, "relative error of doubled layers is not 1");
    o.info(fmt("relative error: tied %g, doubled %g over %zu rows", zero.means.at("combined"),
               doubled.means.at("combined"), doubled.rows.size()));

    const auto m = model::ModelVars::constants(model::init_model(cfg));
    const auto a = probes::zero_out_sensitivity(m, stream);
    const auto b = probes::zero_out_sensitivity(m, stream);
    o.check(a.to_csv() == b.to_csv() && a.to_json().dump() == b.to_json().dump(),
            "zero_out_sensitivity differs between runs");
    o.info(fmt("zero-out over %zu layers identical across runs", a.rows.size()));
}

}  // namespace

int main() {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);

    const fs::path root = work_dir();
    PipelineState st{root};
    bool pipeline_ok = true;

    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
        {"schedule and accounting arithmetic", schedule_arithmetic},
        {"gradient suite", gradient_suite},
        {"SLW realizability oracle", realizability},
        {"pipeline ordering", [&](Outcome& o) {
             pipeline_ordering(o, st);
             pipeline_ok = st.g0_sharp > 0.0;
         }},
        {"rank monotonicity", [&](Outcome& o) {
             o.check(pipeline_ok, "needs the pipeline base");
             if (pipeline_ok) rank_monotonicity(o, st);
         }},
        {"transformation equivalence", [&](Outcome& o) {
             o.check(pipeline_ok, "needs the pipeline base");
             if (pipeline_ok) transform_equivalence(o, st);
         }},
        {"view equivalence", view_equivalence},
        {"storage oracle", storage_oracle},
        {"CLI determinism", [&](Outcome& o) { cli_determinism(o, root); }},
        {"probe outputs", probe_properties},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
        std::printf("%s %zu %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    seconds_since(t0));
        for (const auto& line : o.lines) std::printf("%s\n", line.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
