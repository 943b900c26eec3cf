// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "sharp/sharing/schedule.h"
#include "sharp/sharing/transform.h"

namespace sharp::sharing {

// (N - X) / N
double stored_ratio(const ReplacementSchedule& s);

// Recovery parameters per unit rank for one d1 x d2 projection, alpha excluded.
std::size_t params_per_rank(TransformKind kind, std::size_t d1, std::size_t d2);

// Nearest integer to r0 (d1 + d2) / params_per_rank(kind), ties rounded up.
std::size_t matched_rank(TransformKind kind, std::size_t r0, std::size_t d1, std::size_t d2);

struct CompressionRatio {
    double exact = 0.0;
    // 1 - X/N + X r c with c = params_per_rank / (N d1 d2) kept to one
    // significant figure, the shortcut written next to the exact formula.
    double linearized = 0.0;
    double coefficient = 0.0;
};

// MLP parameters kept by the shared model over the original's:
// (N - X)/N + (X/N) r params_per_rank / (d1 d2).
CompressionRatio compression_ratio(const ReplacementSchedule& s, TransformKind kind, std::size_t r, std::size_t d1,
                                   std::size_t d2);

}  // namespace sharp::sharing
