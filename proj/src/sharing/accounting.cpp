// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include "sharp/sharing/accounting.h"

#include <cmath>

namespace sharp::sharing {

double stored_ratio(const ReplacementSchedule& s) {
    if (s.n_layers == 0) return 1.0;
    return static_cast<double>(s.n_layers - s.target_count()) / static_cast<double>(s.n_layers);
}

std::size_t params_per_rank(TransformKind kind, std::size_t d1, std::size_t d2) {
    switch (kind) {
        case TransformKind::G0: return d1 + d2;
        case TransformKind::G1: return d1 + 3 * d2;
        case TransformKind::G2: return 3 * d1 + d2;
        case TransformKind::G3: return 2 * (d1 + d2);
    }
    return 0;
}

std::size_t matched_rank(TransformKind kind, std::size_t r0, std::size_t d1, std::size_t d2) {
    if (r0 == 0) throw std::invalid_argument("matched_rank: r0 must be at least 1");
    const std::size_t ppr = params_per_rank(kind, d1, d2);
    return (2 * r0 * (d1 + d2) + ppr) / (2 * ppr);
}

CompressionRatio compression_ratio(const ReplacementSchedule& s, TransformKind kind, std::size_t r, std::size_t d1,
                                   std::size_t d2) {
    const double n = static_cast<double>(s.n_layers);
    const double x = static_cast<double>(s.target_count());
    const double ppr = static_cast<double>(params_per_rank(kind, d1, d2));
    const double cells = static_cast<double>(d1) * static_cast<double>(d2);
    CompressionRatio c;
    c.exact = (n - x) / n + (x / n) * static_cast<double>(r) * ppr / cells;
    const double raw = ppr / (n * cells);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    c.coefficient = std::round(raw / mag) * mag;
    c.linearized = 1.0 - x / n + x * static_cast<double>(r) * c.coefficient;
    return c;
}

}  // namespace sharp::sharing
