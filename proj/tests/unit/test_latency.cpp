// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "sharp/latency/latency.h"
#include "sharp/sharing/schedule.h"
#include "sharp/sharing/transform.h"

using namespace sharp;
using namespace sharp::latency;
using sharing::ScheduleKind;
using sharing::TransformKind;

namespace {

constexpr ScheduleKind kBuiltins[] = {ScheduleKind::Next, ScheduleKind::Next2, ScheduleKind::Back,
                                      ScheduleKind::Front, ScheduleKind::More,  ScheduleKind::Max,
                                      ScheduleKind::Ori};
constexpr TransformKind kKinds[] = {TransformKind::G0, TransformKind::G1, TransformKind::G2, TransformKind::G3};

sharing::ReplacementSchedule empty_schedule(std::size_t n) {
    sharing::ReplacementSchedule s;
    s.n_layers = n;
    return s;
}

CostModel unit_cost() {
    CostModel cm;
    cm.bytes_per_param = 2.0;
    cm.load_bandwidth = 1e8;
    cm.per_layer_init_overhead = 0.01;
    cm.compute_rate = 5e8;
    cm.lora_reconstruct_rate = 2e8;
    return cm;
}

}  // namespace

TEST_CASE("llama2-7b parameter count") {
    CHECK(ModelDescription::llama2_7b().total_parameters() == 6738415616ull);
}

TEST_CASE("toy description matches the model's own count") {
    model::ModelConfig c;
    CHECK(ModelDescription::from_config(c).total_parameters() == model::parameter_count(c));
}

TEST_CASE("empty schedule stores the full model") {
    auto d = ModelDescription::llama2_7b();
    auto cm = unit_cost();
    CHECK(stored_bytes(d, empty_schedule(32), TransformKind::G0, 8, cm) ==
          doctest::Approx(2.0 * 6738415616.0).epsilon(1e-15));
}

TEST_CASE("next schedule without recovery factors") {
    auto d = ModelDescription::llama2_7b();
    auto s = sharing::build_schedule(ScheduleKind::Next, 32);
    REQUIRE(s.target_count() == 14);
    CostModel cm = unit_cost();
    cm.bytes_per_param = 0.5;
    const double expect = 0.5 * (6738415616.0 - 14.0 * 3 * 4096 * 11008);
    CHECK(stored_bytes(d, s, TransformKind::G0, 0, cm) == expect);
}

TEST_CASE("stored bytes match tensor enumeration for every schedule and kind") {
    for (auto d : {ModelDescription::llama2_7b(), ModelDescription::from_config(model::ModelConfig{})}) {
        for (ScheduleKind sk : kBuiltins) {
            auto s = sharing::build_schedule(sk, d.n_layers);
            for (TransformKind k : kKinds) {
                for (std::size_t r : {0u, 1u, 8u, 400u}) {
                    std::size_t enumerated = 0;
                    for (const auto& t : stored_tensors(d, s, k, r)) enumerated += t.size();
                    CHECK(enumerated == stored_parameters(d, s, k, r));
                }
            }
        }
    }
}

TEST_CASE("recovery tensor shapes match init_recovery") {
    model::ModelConfig c;
    auto s = sharing::build_schedule(ScheduleKind::Next, c.n_layers);
    for (TransformKind k : kKinds) {
        auto rp = sharing::init_recovery(k, s, 5, c.d_model, c.d_hidden, 0);
        CHECK(rp.parameter_count() ==
              s.target_count() * recovery_parameters_per_layer(k, 5, c.d_model, c.d_hidden));
    }
}

TEST_CASE("r = 0 storage saving is the target MLP share") {
    auto d = ModelDescription::llama2_7b();
    CostModel cm = unit_cost();
    for (ScheduleKind sk : kBuiltins) {
        auto s = sharing::build_schedule(sk, 32);
        auto sv = savings_report(simulate_base(d, cm), simulate_run(d, s, TransformKind::G0, 0, cm));
        const double closed = static_cast<double>(s.target_count() * d.mlp_parameters_per_layer()) /
                              static_cast<double>(d.total_parameters());
        CHECK(sv.model_size == doctest::Approx(closed).epsilon(1e-12));
    }
}

TEST_CASE("simulate_run arithmetic") {
    auto d = ModelDescription::from_config(model::ModelConfig{});
    CostModel cm = unit_cost();
    auto base = simulate_base(d, cm);
    auto same = simulate_run(d, empty_schedule(d.n_layers), TransformKind::G1, 4, cm);
    CHECK(same.total_time == base.total_time);
    CHECK(base.total_time == base.load_init_time + base.forward_time);

    auto s = sharing::build_schedule(ScheduleKind::Next, d.n_layers);
    auto a = simulate_run(d, s, TransformKind::G0, 8, cm);
    CostModel fast = cm;
    fast.load_bandwidth *= 2.0;
    auto b = simulate_run(d, s, TransformKind::G0, 8, fast);
    const double init = static_cast<double>(s.stored_layers()) * cm.per_layer_init_overhead;
    CHECK(b.load_init_time - init == doctest::Approx((a.load_init_time - init) / 2.0).epsilon(1e-14));
    const double reconstructed = static_cast<double>(s.target_count() * d.mlp_parameters_per_layer());
    CHECK(a.forward_time ==
          doctest::Approx(static_cast<double>(d.total_parameters()) / cm.compute_rate +
                          reconstructed / cm.lora_reconstruct_rate));
    CHECK_THROWS_AS(simulate_run(d, sharing::build_schedule(ScheduleKind::Next, 32), TransformKind::G0, 0, cm),
                    std::invalid_argument);
}

TEST_CASE("savings are invariant under uniform rate scaling") {
    auto d = ModelDescription::llama2_7b();
    auto s = sharing::build_schedule(ScheduleKind::Next, 32);
    CostModel cm = CostModel::mobile_llama2_7b();
    CostModel scaled = cm;
    scaled.load_bandwidth *= 3.0;
    scaled.compute_rate *= 3.0;
    scaled.lora_reconstruct_rate *= 3.0;
    scaled.per_layer_init_overhead /= 3.0;
    auto a = savings_report(simulate_base(d, cm), simulate_run(d, s, TransformKind::G0, 0, cm));
    auto b = savings_report(simulate_base(d, scaled), simulate_run(d, s, TransformKind::G0, 0, scaled));
    CHECK(a.load_init == doctest::Approx(b.load_init).epsilon(1e-12));
    CHECK(a.total == doctest::Approx(b.total).epsilon(1e-12));
}

TEST_CASE("savings_report edge cases") {
    RunEstimate e{2.0, 1.0, 3.0, 100.0};
    auto same = savings_report(e, e);
    CHECK(same.load_init == 0.0);
    CHECK(same.model_size == 0.0);
    auto half = savings_report(e, RunEstimate{1.0, 0.5, 1.5, 50.0});
    CHECK(half.load_init == 0.5);
    CHECK(half.forward == 0.5);
    CHECK(half.total == 0.5);
    CHECK(half.model_size == 0.5);
    CHECK_THROWS_AS(savings_report(RunEstimate{}, e), std::domain_error);
}

TEST_CASE("mobile calibration reproduces the unshared phone run") {
    auto d = ModelDescription::llama2_7b();
    auto cm = CostModel::mobile_llama2_7b();
    auto base = simulate_base(d, cm);
    CHECK(base.load_init_time == doctest::Approx(9.794).epsilon(1e-12));
    CHECK(base.forward_time == doctest::Approx(2.905).epsilon(1e-12));
    CHECK(base.stored_bytes == doctest::Approx(4.04e9).epsilon(1e-12));
    auto rep = latency_report(d, sharing::build_schedule(ScheduleKind::Next, 32), TransformKind::G0, 0, cm);
    CHECK(rep.savings.load_init > 0.1);
    CHECK(rep.savings.load_init < 0.5);
    CHECK(rep.to_csv().rfind("model,load_init,forward,total,model_size\n", 0) == 0);
}

TEST_CASE("cost model json round trip and validation") {
    auto cm = CostModel::mobile_llama2_7b();
    auto back = CostModel::from_json(cm.to_json());
    CHECK(back.load_bandwidth == cm.load_bandwidth);
    CHECK(back.overhead_bytes_per_layer == cm.overhead_bytes_per_layer);
    CHECK_THROWS_AS(CostModel::from_json({{"load_bandwidth", 0.0}}), std::invalid_argument);
    CHECK_THROWS_AS(CostModel::from_json({{"compute_rate", -1.0}}), std::invalid_argument);
}
