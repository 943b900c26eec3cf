// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include "sharp/sharing/view.h"

#include <stdexcept>
#include <string>

#include "sharp/tensorkernel/ops.h"

namespace sharp::sharing {

using model::MlpProvider;
using model::MlpWeights;
using model::ModelVars;

namespace {

const Var<float>& base_mlp(const ModelVars& m, std::size_t l, Role r) {
    const auto& L = m.layers.at(l - 1);
    switch (r) {
        case Role::Gate: return L.gate;
        case Role::Up: return L.up;
        case Role::Down: return L.down;
    }
    throw std::logic_error("bad role");
}

Var<float> predicted(const ModelVars& m, const ReplacementSchedule& s, const RecoveryVars& rv, std::size_t l,
                     Role r) {
    auto it = rv.targets.find({l, r});
    if (it == rv.targets.end()) {
        throw std::invalid_argument("missing recovery params for target layer " + std::to_string(l) + " " +
                                    model::role_name(r));
    }
    if (!rv.share_reference) return tk::matmul(it->second.a, it->second.b);
    return apply_transform(rv.kind, base_mlp(m, *s.reference_of(l), r), it->second);
}

RecoveryVars wrap(const RecoveryParams& rp, bool trainable) {
    RecoveryVars rv;
    rv.kind = rp.kind;
    rv.share_reference = rp.share_reference;
    for (const auto& [k, f] : rp.targets) {
        rv.targets.emplace(k, trainable ? FactorVars::parameters(f) : FactorVars::constants(f));
    }
    for (const auto& [k, f] : rp.adapters) {
        rv.adapters.emplace(k, trainable ? FactorVars::parameters(f) : FactorVars::constants(f));
    }
    return rv;
}

}  // namespace

RecoveryVars RecoveryVars::constants(const RecoveryParams& rp) { return wrap(rp, false); }
RecoveryVars RecoveryVars::parameters(const RecoveryParams& rp) { return wrap(rp, true); }

std::vector<Var<float>> RecoveryVars::trainable() const {
    std::vector<Var<float>> out;
    for (const auto* m : {&targets, &adapters}) {
        for (const auto& [k, f] : *m) {
            for (auto& v : f.defined()) {
                if (v.requires_grad()) out.push_back(v);
            }
        }
    }
    return out;
}

RecoveryParams RecoveryVars::snapshot(const RecoveryParams& like) const {
    RecoveryParams out = like;
    for (const auto& [k, f] : targets) out.targets[k] = f.snapshot();
    for (const auto& [k, f] : adapters) out.adapters[k] = f.snapshot();
    return out;
}

MlpProvider recovery_provider(const ModelVars& base, const ReplacementSchedule& s, const RecoveryVars& rv) {
    for (std::size_t l : s.targets()) {
        for (Role r : model::kMlpRoles) {
            if (!rv.targets.count({l, r})) {
                throw std::invalid_argument("missing recovery params for target layer " + std::to_string(l) + " " +
                                            model::role_name(r));
            }
        }
    }
    return [base, s, rv](std::size_t l) -> std::optional<MlpWeights> {
        if (s.is_target(l)) {
            return MlpWeights{predicted(base, s, rv, l, Role::Gate), predicted(base, s, rv, l, Role::Up),
                              predicted(base, s, rv, l, Role::Down)};
        }
        if (rv.adapters.count({l, Role::Gate})) {
            auto adapt = [&](Role r) {
                const FactorVars& f = rv.adapters.at({l, r});
                return tk::add(base_mlp(base, l, r), tk::matmul(f.a, f.b));
            };
            return MlpWeights{adapt(Role::Gate), adapt(Role::Up), adapt(Role::Down)};
        }
        return std::nullopt;
    };
}

MlpProvider direct_provider(const ModelVars& base, const ReplacementSchedule& s) {
    return [base, s](std::size_t l) -> std::optional<MlpWeights> {
        const auto j = s.reference_of(l);
        if (!j) return std::nullopt;
        return MlpWeights{base_mlp(base, *j, Role::Gate), base_mlp(base, *j, Role::Up), base_mlp(base, *j, Role::Down)};
    };
}

MlpProvider drop_provider(const ReplacementSchedule& s) {
    return [s](std::size_t l) -> std::optional<MlpWeights> {
        if (!s.is_target(l)) return std::nullopt;
        MlpWeights w;
        w.dropped = true;
        return w;
    };
}

SharedModelView::SharedModelView(ModelVars base, ReplacementSchedule schedule, MlpProvider provider,
                                 std::size_t stored_parameters)
    : base_(std::move(base)), schedule_(std::move(schedule)), provider_(std::move(provider)),
      stored_(stored_parameters) {}

model::ForwardResult SharedModelView::forward(std::span<const std::int32_t> tokens, std::size_t batch,
                                              std::size_t seq, std::span<const std::size_t> taps) const {
    return model::forward(base_, tokens, batch, seq, provider_, taps);
}

model::PerplexityResult SharedModelView::perplexity(std::span<const std::int32_t> stream) const {
    return model::perplexity(base_, stream, provider_);
}

std::size_t stored_base_parameters(const model::ModelConfig& c, const ReplacementSchedule& s) {
    return model::parameter_count(c) - s.target_count() * 3 * c.d_model * c.d_hidden;
}

SharedModelView materialize_view(const ModelVars& base, const ReplacementSchedule& s, const RecoveryParams& rp,
                                 TransformKind kind) {
    if (!(rp.schedule == s)) throw std::invalid_argument("materialize_view: recovery params belong to another schedule");
    if (rp.kind != kind) {
        throw std::invalid_argument(std::string("materialize_view: recovery params are ") + transform_name(rp.kind) +
                                    ", requested " + transform_name(kind));
    }
    MlpProvider p = recovery_provider(base, s, RecoveryVars::constants(rp));
    return SharedModelView(base, s, std::move(p), stored_base_parameters(base.config, s) + rp.parameter_count());
}

SharedModelView direct_view(const ModelVars& base, const ReplacementSchedule& s) {
    return SharedModelView(base, s, direct_provider(base, s), stored_base_parameters(base.config, s));
}

SharedModelView drop_view(const ModelVars& base, const ReplacementSchedule& s) {
    return SharedModelView(base, s, drop_provider(s), stored_base_parameters(base.config, s));
}

model::WeightStore materialize_explicit(const model::WeightStore& base, const RecoveryParams& rp) {
    model::WeightStore out = base;
    for (std::size_t l : rp.schedule.targets()) {
        for (Role r : model::kMlpRoles) {
            auto it = rp.targets.find({l, r});
            if (it == rp.targets.end()) {
                throw std::invalid_argument("missing recovery params for target layer " + std::to_string(l) + " " +
                                            model::role_name(r));
            }
            const std::size_t j = *rp.schedule.reference_of(l);
            Tensor<float> w = rp.share_reference ? apply_transform(rp.kind, base.mlp(j, r), it->second)
                                                 : tk::matmul(Var<float>::constant(it->second.a),
                                                              Var<float>::constant(it->second.b)).value();
            w.requires_grad = false;
            out.layer(l).mlp(r) = std::move(w);
        }
    }
    for (const auto& [k, f] : rp.adapters) {
        Tensor<float> w = tk::add(Var<float>::constant(base.mlp(k.first, k.second)),
                                  tk::matmul(Var<float>::constant(f.a), Var<float>::constant(f.b))).value();
        w.requires_grad = false;
        out.layer(k.first).mlp(k.second) = std::move(w);
    }
    return out;
}

}  // namespace sharp::sharing
