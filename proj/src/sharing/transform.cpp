// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include "sharp/sharing/transform.h"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "sharp/tensorkernel/ops.h"

namespace sharp::sharing {

using namespace sharp::tk;

namespace {

void check(const Var<float>& v, const char* name, std::size_t rows, std::size_t cols) {
    if (!v.defined()) throw ShapeError(std::string("apply_transform: factor ") + name + " is missing");
    const Shape want{rows, cols};
    if (v.shape() != want) {
        throw ShapeError(std::string("apply_transform: factor ") + name + " has shape " + shape_string(v.shape()) +
                         ", expected " + shape_string(want));
    }
}

Tensor<float> gaussian(Shape shape, float sd, std::mt19937_64& rng) {
    std::normal_distribution<float> nd(0.0f, sd);
    Tensor<float> t = Tensor<float>::zeros(std::move(shape));
    for (float& v : t.data) v = nd(rng);
    return t;
}

std::mt19937_64 stream(std::uint64_t seed, std::size_t layer, Role role, std::uint64_t tag) {
    std::seed_seq ss{seed, static_cast<std::uint64_t>(layer), static_cast<std::uint64_t>(role), tag};
    return std::mt19937_64(ss);
}

Var<float> var_or_empty(const Tensor<float>& t, bool trainable) {
    if (t.size() == 0) return {};
    return trainable ? Var<float>::parameter(t) : Var<float>::constant(t);
}

Tensor<float> value_or_empty(const Var<float>& v) {
    if (!v.defined()) return {};
    Tensor<float> t = v.value();
    t.requires_grad = false;
    return t;
}

}  // namespace

const char* transform_name(TransformKind k) {
    switch (k) {
        case TransformKind::G0: return "g0";
        case TransformKind::G1: return "g1";
        case TransformKind::G2: return "g2";
        case TransformKind::G3: return "g3";
    }
    return "?";
}

TransformKind transform_from_name(std::string_view name) {
    for (auto k : {TransformKind::G0, TransformKind::G1, TransformKind::G2, TransformKind::G3}) {
        if (name == transform_name(k)) return k;
    }
    throw std::invalid_argument("unknown transform kind: " + std::string(name));
}

std::pair<const char*, const char*> extra_factor_names(TransformKind k) {
    switch (k) {
        case TransformKind::G0: return {"", ""};
        case TransformKind::G1: return {"C", "D"};
        case TransformKind::G2: return {"E", "F"};
        case TransformKind::G3: return {"U", "V"};
    }
    return {"", ""};
}

std::size_t ProjectionFactors::parameter_count() const {
    return alpha.size() + a.size() + b.size() + extra1.size() + extra2.size();
}

FactorVars FactorVars::constants(const ProjectionFactors& f) {
    return {var_or_empty(f.alpha, false), var_or_empty(f.a, false), var_or_empty(f.b, false),
            var_or_empty(f.extra1, false), var_or_empty(f.extra2, false)};
}

FactorVars FactorVars::parameters(const ProjectionFactors& f) {
    return {var_or_empty(f.alpha, true), var_or_empty(f.a, true), var_or_empty(f.b, true),
            var_or_empty(f.extra1, true), var_or_empty(f.extra2, true)};
}

ProjectionFactors FactorVars::snapshot() const {
    return {value_or_empty(alpha), value_or_empty(a), value_or_empty(b), value_or_empty(extra1),
            value_or_empty(extra2)};
}

std::vector<Var<float>> FactorVars::defined() const {
    std::vector<Var<float>> out;
    for (const auto* v : {&alpha, &a, &b, &extra1, &extra2}) {
        if (v->defined()) out.push_back(*v);
    }
    return out;
}

Var<float> apply_transform(TransformKind kind, const Var<float>& theta, const FactorVars& f) {
    if (theta.shape().size() != 2) throw ShapeError("apply_transform: reference must be a matrix");
    const std::size_t p = theta.shape()[0], q = theta.shape()[1];
    if (!f.a.defined() || f.a.shape().size() != 2) throw ShapeError("apply_transform: factor A is missing");
    const std::size_t r = f.a.shape()[1];
    check(f.a, "A", p, r);
    check(f.b, "B", r, q);
    if (!f.alpha.defined() || f.alpha.size() != 1) throw ShapeError("apply_transform: alpha must hold one element");
    const Var<float> ab = matmul(f.a, f.b);
    const auto [n1, n2] = extra_factor_names(kind);
    switch (kind) {
        case TransformKind::G0:
            return add(scale(theta, f.alpha), ab);
        case TransformKind::G1:
            check(f.extra1, n1, r, q);
            check(f.extra2, n2, r, q);
            return add(scale(matmul(matmul(theta, transpose(f.extra1)), f.extra2), f.alpha), ab);
        case TransformKind::G2:
            check(f.extra1, n1, p, r);
            check(f.extra2, n2, p, r);
            return add(scale(matmul(f.extra1, matmul(transpose(f.extra2), theta)), f.alpha), ab);
        case TransformKind::G3:
            check(f.extra1, n1, p, r);
            check(f.extra2, n2, r, q);
            return add(scale(mul(matmul(f.extra1, f.extra2), theta), f.alpha), ab);
    }
    throw std::logic_error("apply_transform: bad kind");
}

Tensor<float> apply_transform(TransformKind kind, const Tensor<float>& theta, const ProjectionFactors& f) {
    Tensor<float> out = apply_transform(kind, Var<float>::constant(theta), FactorVars::constants(f)).value();
    out.requires_grad = false;
    return out;
}

std::pair<std::size_t, std::size_t> projection_shape(Role role, std::size_t d1, std::size_t d2) {
    return role == Role::Down ? std::pair{d2, d1} : std::pair{d1, d2};
}

std::size_t RecoveryParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [k, f] : targets) n += f.parameter_count();
    for (const auto& [k, f] : adapters) n += f.parameter_count();
    return n;
}

RecoveryParams init_recovery(TransformKind kind, const ReplacementSchedule& schedule, std::size_t rank,
                             std::size_t d1, std::size_t d2, std::uint64_t seed) {
    if (rank == 0) throw std::invalid_argument("init_recovery: rank must be at least 1");
    RecoveryParams rp;
    rp.kind = kind;
    rp.rank = rank;
    rp.schedule = schedule;
    const double r = static_cast<double>(rank);
    for (std::size_t l : schedule.targets()) {
        for (Role role : model::kMlpRoles) {
            const auto [p, q] = projection_shape(role, d1, d2);
            auto rng = stream(seed, l, role, 0);
            ProjectionFactors f;
            f.alpha = Tensor<float>::scalar(1.0f);
            f.a = gaussian({p, rank}, 0.02f, rng);
            f.b = Tensor<float>::zeros({rank, q});
            switch (kind) {
                case TransformKind::G0: break;
                case TransformKind::G1: {
                    const auto sd = static_cast<float>(std::pow(static_cast<double>(q) * r, -0.25));
                    f.extra1 = gaussian({rank, q}, sd, rng);
                    f.extra2 = gaussian({rank, q}, sd, rng);
                    break;
                }
                case TransformKind::G2: {
                    const auto sd = static_cast<float>(std::pow(static_cast<double>(p) * r, -0.25));
                    f.extra1 = gaussian({p, rank}, sd, rng);
                    f.extra2 = gaussian({p, rank}, sd, rng);
                    break;
                }
                case TransformKind::G3: {
                    const auto sd = static_cast<float>(std::pow(r, -0.25));
                    f.extra1 = gaussian({p, rank}, sd, rng);
                    f.extra2 = gaussian({rank, q}, sd, rng);
                    break;
                }
            }
            rp.targets.emplace(FactorKey{l, role}, std::move(f));
        }
    }
    return rp;
}

RecoveryParams init_reference_free(const ReplacementSchedule& schedule, std::size_t rank, std::size_t d1,
                                   std::size_t d2, std::uint64_t seed) {
    if (rank == 0) throw std::invalid_argument("init_reference_free: rank must be at least 1");
    RecoveryParams rp;
    rp.kind = TransformKind::G0;
    rp.rank = rank;
    rp.schedule = schedule;
    rp.share_reference = false;
    for (std::size_t l : schedule.targets()) {
        for (Role role : model::kMlpRoles) {
            const auto [p, q] = projection_shape(role, d1, d2);
            auto rng = stream(seed, l, role, 1);
            ProjectionFactors f;
            f.a = gaussian({p, rank}, 0.02f, rng);
            f.b = role == Role::Down ? Tensor<float>::zeros({rank, q}) : gaussian({rank, q}, 0.02f, rng);
            rp.targets.emplace(FactorKey{l, role}, std::move(f));
        }
    }
    return rp;
}

void attach_full_lora(RecoveryParams& rp, std::size_t rank, std::size_t d1, std::size_t d2, std::uint64_t seed) {
    if (rank == 0) throw std::invalid_argument("attach_full_lora: rank must be at least 1");
    rp.adapters.clear();
    for (std::size_t l = 1; l <= rp.schedule.n_layers; ++l) {
        if (rp.schedule.is_target(l)) continue;
        for (Role role : model::kMlpRoles) {
            const auto [p, q] = projection_shape(role, d1, d2);
            auto rng = stream(seed, l, role, 2);
            ProjectionFactors f;
            f.a = gaussian({p, rank}, 0.02f, rng);
            f.b = Tensor<float>::zeros({rank, q});
            rp.adapters.emplace(FactorKey{l, role}, std::move(f));
        }
    }
}

}  // namespace sharp::sharing
