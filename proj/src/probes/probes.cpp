// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include "sharp/probes/probes.h"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "sharp/sharing/view.h"

namespace sharp::probes {

using model::Role;

const char* probe_name(ProbeKind k) {
    switch (k) {
        case ProbeKind::Replace: return "replace";
        case ProbeKind::RelativeError: return "relative-error";
        case ProbeKind::ZeroOut: return "zero-out";
    }
    return "?";
}

ProbeKind probe_from_name(std::string_view name) {
    for (ProbeKind k : {ProbeKind::Replace, ProbeKind::RelativeError, ProbeKind::ZeroOut}) {
        if (name == probe_name(k)) return k;
    }
    throw std::invalid_argument("unknown probe kind '" + std::string(name) +
                                "' (expected replace, relative-error or zero-out)");
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void check_layer(const model::ModelConfig& c, std::size_t l, const char* what) {
    if (l < 1 || l > c.n_layers) {
        throw std::out_of_range(std::string(what) + " layer " + std::to_string(l) + " outside [1, " +
                                std::to_string(c.n_layers) + "]");
    }
}

double frobenius(const tk::Tensor<float>& t) {
    double s = 0.0;
    for (float v : t.data) s += static_cast<double>(v) * v;
    return std::sqrt(s);
}

}  // namespace

nlohmann::json ProbeReport::to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json j = {{"layer", r.layer}, {"value", r.value}, {"delta", r.delta}, {"boundary", r.boundary}};
        if (r.reference) j["reference"] = r.reference;
        if (!r.role.empty()) j["role"] = r.role;
        rows_json.push_back(std::move(j));
    }
    return {{"schema_version", kReportSchemaVersion},
            {"probe", probe_name(kind)},
            {"baseline", baseline},
            {"rows", rows_json},
            {"means", means},
            {"notes", notes},
            {"config", config}};
}

std::string ProbeReport::to_csv() const {
    std::ostringstream out;
    out << "reference,layer,role,value,delta,boundary\n";
    for (const auto& r : rows) {
        out << r.reference << ',' << r.layer << ',' << r.role << ',' << fmt(r.value) << ',' << fmt(r.delta) << ','
            << (r.boundary ? 1 : 0) << '\n';
    }
    return out.str();
}

double replace_probe(const model::ModelVars& base, std::size_t j, std::size_t l,
                     std::span<const std::int32_t> stream, bool allow_same) {
    check_layer(base.config, j, "reference");
    check_layer(base.config, l, "target");
    if (j > l || (j == l && !allow_same)) {
        throw std::invalid_argument("replace_probe needs reference < target, got " + std::to_string(j) +
                                    " >= " + std::to_string(l));
    }
    const auto& src = base.layers[j - 1];
    model::MlpProvider provider = [&src, l](std::size_t layer) -> std::optional<model::MlpWeights> {
        if (layer != l) return std::nullopt;
        return model::MlpWeights{src.gate, src.up, src.down};
    };
    return model::perplexity(base, stream, provider).perplexity;
}

ProbeReport replace_sweep(const model::ModelVars& base, std::span<const std::int32_t> stream,
                          std::vector<std::pair<std::size_t, std::size_t>> pairs) {
    const std::size_t n = base.config.n_layers;
    if (pairs.empty()) {
        for (std::size_t l = 2; l <= n; ++l) pairs.emplace_back(l - 1, l);
    }
    ProbeReport rep;
    rep.kind = ProbeKind::Replace;
    rep.baseline = model::perplexity(base, stream).perplexity;
    for (auto [j, l] : pairs) {
        ProbeRow row;
        row.reference = j;
        row.layer = l;
        row.value = replace_probe(base, j, l, stream);
        row.delta = row.value - rep.baseline;
        row.boundary = j == 1 || l == n;
        rep.rows.push_back(row);
    }
    rep.notes.push_back("boundary rows involve the first or last layer");
    return rep;
}

RelativeError adjacent_relative_error(const model::WeightStore& w, Role role) {
    const std::size_t n = w.config.n_layers;
    if (n < 2) throw std::invalid_argument("relative error needs at least 2 layers");
    RelativeError out;
    for (std::size_t i = 1; i < n; ++i) {
        const auto& a = w.mlp(i, role);
        const auto& b = w.mlp(i + 1, role);
        double diff = 0.0;
        for (std::size_t k = 0; k < a.data.size(); ++k) {
            const double d = static_cast<double>(b.data[k]) - a.data[k];
            diff += d * d;
        }
        diff = std::sqrt(diff);
        const double denom = frobenius(a);
        double r = 0.0;
        if (denom > 0.0) r = diff / denom;
        else if (diff > 0.0) r = std::numeric_limits<double>::infinity();
        out.ratios.push_back(r);
        out.mean += r;
    }
    out.mean /= static_cast<double>(out.ratios.size());
    return out;
}

ProbeReport relative_error_report(const model::WeightStore& w) {
    ProbeReport rep;
    rep.kind = ProbeKind::RelativeError;
    double combined = 0.0;
    for (Role role : model::kMlpRoles) {
        const auto e = adjacent_relative_error(w, role);
        for (std::size_t i = 0; i < e.ratios.size(); ++i) {
            ProbeRow row;
            row.reference = i + 1;
            row.layer = i + 2;
            row.role = model::role_name(role);
            row.value = e.ratios[i];
            row.boundary = i == 0 || i + 2 == w.config.n_layers;
            rep.rows.push_back(row);
        }
        rep.means[model::role_name(role)] = e.mean;
        combined += e.mean;
    }
    rep.means["combined"] = combined / 3.0;
    rep.notes.push_back("Frobenius norm; value = |W(layer) - W(reference)| / |W(reference)|");
    return rep;
}

namespace {

double zeroed_perplexity(const model::ModelVars& base, std::span<const std::int32_t> stream, std::size_t layer) {
    check_layer(base.config, layer, "zero-out");
    sharing::ReplacementSchedule s;
    s.n_layers = base.config.n_layers;
    s.groups.push_back({layer - 1, {layer}});
    return sharing::drop_view(base, s).perplexity(stream).perplexity;
}

}  // namespace

double zero_out_delta(const model::ModelVars& base, std::span<const std::int32_t> stream, std::size_t layer,
                      double base_ppl) {
    return zeroed_perplexity(base, stream, layer) - base_ppl;
}

ProbeReport zero_out_sensitivity(const model::ModelVars& base, std::span<const std::int32_t> stream,
                                 std::optional<std::vector<std::size_t>> layers) {
    const std::size_t n = base.config.n_layers;
    ProbeReport rep;
    rep.kind = ProbeKind::ZeroOut;
    if (!layers) {
        layers.emplace();
        for (std::size_t l = 2; l <= n; ++l) layers->push_back(l);
        rep.notes.push_back("layer 1 skipped by default");
    }
    for (std::size_t l : *layers) check_layer(base.config, l, "zero-out");
    rep.baseline = model::perplexity(base, stream).perplexity;
    for (std::size_t l : *layers) {
        ProbeRow row;
        row.layer = l;
        row.value = zeroed_perplexity(base, stream, l);
        row.delta = row.value - rep.baseline;
        row.boundary = l == 1 || l == n;
        rep.rows.push_back(row);
    }
    rep.notes.push_back("delta = ppl(zeroed) - ppl(base); positive is worse");
    return rep;
}

}  // namespace sharp::probes
