// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "sharp/tensorkernel/autograd.h"

namespace sharp::tk {

using ScalarFn = std::function<Var<double>(std::span<const Var<double>>)>;

struct GradCheckResult {
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::size_t checked = 0;
};

// Compares reverse-mode gradients of f at `point` to central differences
// (f(x+h) - f(x-h)) / 2h, element by element over every input. The relative
// error is |analytic - numeric| / max(|analytic|, |numeric|, floor); the floor
// keeps entries whose true gradient is ~0 from dividing by noise.
GradCheckResult grad_check(const ScalarFn& f, const std::vector<Tensor<double>>& point,
                           double h = 1e-4, double floor = 1e-4);

}  // namespace sharp::tk
