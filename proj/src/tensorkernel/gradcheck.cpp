// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include "sharp/tensorkernel/gradcheck.h"

#include <algorithm>
#include <cmath>

namespace sharp::tk {

namespace {

double eval(const ScalarFn& f, const std::vector<Tensor<double>>& point) {
    std::vector<Var<double>> in;
    in.reserve(point.size());
    for (const auto& t : point) in.push_back(Var<double>::constant(t));
    const Var<double> out = f(in);
    if (out.size() != 1) throw std::invalid_argument("grad_check: function must return a scalar");
    return out.value().data[0];
}

}  // namespace

GradCheckResult grad_check(const ScalarFn& f, const std::vector<Tensor<double>>& point, double h, double floor) {
    std::vector<Var<double>> in;
    in.reserve(point.size());
    for (const auto& t : point) in.push_back(Var<double>::parameter(t));
    const Var<double> loss = f(in);
    const Gradients<double> grads = backward(loss);

    GradCheckResult res;
    std::vector<Tensor<double>> probe = point;
    for (std::size_t k = 0; k < point.size(); ++k) {
        const std::span<const double> analytic = grads.of(in[k]);
        for (std::size_t i = 0; i < point[k].size(); ++i) {
            const double x0 = point[k].data[i];
            probe[k].data[i] = x0 + h;
            const double fp = eval(f, probe);
            probe[k].data[i] = x0 - h;
            const double fm = eval(f, probe);
            probe[k].data[i] = x0;
            const double num = (fp - fm) / (2.0 * h);
            const double an = analytic.empty() ? 0.0 : analytic[i];
            const double abs_err = std::abs(an - num);
            const double denom = std::max({std::abs(an), std::abs(num), floor});
            res.max_abs_error = std::max(res.max_abs_error, abs_err);
            res.max_rel_error = std::max(res.max_rel_error, abs_err / denom);
            ++res.checked;
        }
    }
    return res;
}

}  // namespace sharp::tk
