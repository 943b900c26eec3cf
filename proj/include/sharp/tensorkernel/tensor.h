// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major tensors. A Tensor is a plain value; autograd lives in
// autograd.h and wraps tensors in graph nodes.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <new>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sharp::tk {

using Shape = std::vector<std::size_t>;

// Cache-line aligned storage. Vectorized kernels peel a different number of
// leading elements depending on the base address, which changes summation
// order; a fixed alignment keeps results independent of where the heap put
// the buffer.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::size_t kAlign = 64;

    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) {
        const std::size_t bytes = (n * sizeof(T) + kAlign - 1) / kAlign * kAlign;
        void* p = std::aligned_alloc(kAlign, bytes == 0 ? kAlign : bytes);
        if (!p) throw std::bad_alloc();
        return static_cast<T*>(p);
    }
    void deallocate(T* p, std::size_t) noexcept { std::free(p); }

    template <class U>
    friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) noexcept {
        return true;
    }
};

template <class T>
using Buffer = std::vector<T, AlignedAllocator<T>>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

template <class T>
struct Tensor {
    Shape shape;
    Buffer<T> data;
    bool requires_grad = false;

    Tensor() = default;
    Tensor(Shape s, Buffer<T> d, bool grad = false)
        : shape(std::move(s)), data(std::move(d)), requires_grad(grad) {
        if (numel(shape) != data.size()) {
            throw ShapeError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_string(shape));
        }
    }

    static Tensor zeros(Shape s) {
        const std::size_t n = numel(s);
        return Tensor(std::move(s), Buffer<T>(n, T(0)));
    }
    static Tensor full(Shape s, T value) {
        const std::size_t n = numel(s);
        return Tensor(std::move(s), Buffer<T>(n, value));
    }
    static Tensor scalar(T value) { return Tensor({1}, {value}); }

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t rows() const { return shape.empty() ? 0 : shape.front(); }
    std::size_t cols() const { return shape.size() < 2 ? 1 : shape.back(); }

    T& operator()(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

    bool all_finite() const {
        for (const T& v : data) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    template <class U>
    Tensor<U> cast() const {
        Buffer<U> out(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) out[i] = static_cast<U>(data[i]);
        return Tensor<U>(shape, std::move(out), requires_grad);
    }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape == b.shape && a.data == b.data;
    }
};

// Bitwise comparison (distinguishes -0 from +0 and compares NaN payloads).
template <class T>
bool bitwise_equal(const Tensor<T>& a, const Tensor<T>& b);

template <class T>
double frobenius_norm(const Tensor<T>& t);

}  // namespace sharp::tk
