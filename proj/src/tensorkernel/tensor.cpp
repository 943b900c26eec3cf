// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include "sharp/tensorkernel/tensor.h"

#include <cstring>

namespace sharp::tk {

std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

template <class T>
bool bitwise_equal(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape != b.shape) return false;
    return a.data.empty() || std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(T)) == 0;
}

template <class T>
double frobenius_norm(const Tensor<T>& t) {
    double acc = 0.0;
    for (const T& v : t.data) acc += static_cast<double>(v) * static_cast<double>(v);
    return std::sqrt(acc);
}

template bool bitwise_equal(const Tensor<float>&, const Tensor<float>&);
template bool bitwise_equal(const Tensor<double>&, const Tensor<double>&);
template double frobenius_norm(const Tensor<float>&);
template double frobenius_norm(const Tensor<double>&);

}  // namespace sharp::tk
