// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode differentiation over a dynamically built graph.
//
// Every op returns a Var that owns its value and, when any input requires a
// gradient, links to its inputs together with an adjoint closure. Graphs are
// confined to one thread; independent graphs can run concurrently.

#pragma once

#include <functional>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "sharp/tensorkernel/tensor.h"

namespace sharp::tk {

namespace detail {

template <class T>
struct Node {
    Tensor<T> value;
    Buffer<T> grad;
    bool requires_grad = false;
    bool is_leaf = true;
    std::vector<std::shared_ptr<Node>> parents;
    // Reads this->grad and accumulates into parents[i]->grad.
    std::function<void(Node&)> backward;

    Buffer<T>& ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), T(0));
        return grad;
    }
};

}  // namespace detail

template <class T>
class Var {
public:
    using Node = detail::Node<T>;

    Var() = default;
    explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    static Var constant(Tensor<T> value) {
        auto n = std::make_shared<Node>();
        n->value = std::move(value);
        n->value.requires_grad = false;
        return Var(std::move(n));
    }
    static Var parameter(Tensor<T> value) {
        auto n = std::make_shared<Node>();
        n->value = std::move(value);
        n->value.requires_grad = true;
        n->requires_grad = true;
        return Var(std::move(n));
    }

    bool defined() const { return static_cast<bool>(node_); }
    const Tensor<T>& value() const { return node_->value; }
    const Shape& shape() const { return node_->value.shape; }
    std::size_t size() const { return node_->value.size(); }
    bool requires_grad() const { return node_->requires_grad; }
    bool is_leaf() const { return node_->is_leaf; }

    // Gradient from the most recent backward pass; empty when none was produced.
    const Buffer<T>& grad() const { return node_->grad; }

    // Leaves only: the optimizer updates parameter values in place.
    Tensor<T>& mutable_leaf_value();

    Node* node() const { return node_.get(); }
    const std::shared_ptr<Node>& node_ptr() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

template <class T>
class Gradients {
public:
    bool contains(const Var<T>& v) const { return grads_.count(v.node()) != 0; }
    std::span<const T> of(const Var<T>& v) const;
    std::size_t size() const { return grads_.size(); }

private:
    template <class>
    friend class GradTape;
    std::unordered_map<const detail::Node<T>*, const Buffer<T>*> grads_;
};

// Topologically ordered record of the operations that a scalar loss depends on.
// Replaying it in reverse accumulates adjoints; replaying twice gives the same
// result because every replay starts from zeroed gradient buffers.
template <class T>
class GradTape {
public:
    explicit GradTape(const Var<T>& loss);

    std::size_t size() const { return order_.size(); }
    Gradients<T> backward() const;

private:
    Var<T> loss_;
    std::vector<detail::Node<T>*> order_;
};

template <class T>
Gradients<T> backward(const Var<T>& loss) {
    return GradTape<T>(loss).backward();
}

}  // namespace sharp::tk
