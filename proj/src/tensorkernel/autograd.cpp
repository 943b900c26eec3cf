// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include "sharp/tensorkernel/autograd.h"

#include <unordered_set>

namespace sharp::tk {

template <class T>
Tensor<T>& Var<T>::mutable_leaf_value() {
    if (!node_->is_leaf) throw std::logic_error("mutable_leaf_value on a non-leaf tensor");
    return node_->value;
}

template <class T>
std::span<const T> Gradients<T>::of(const Var<T>& v) const {
    auto it = grads_.find(v.node());
    if (it == grads_.end()) return {};
    return {it->second->data(), it->second->size()};
}

template <class T>
GradTape<T>::GradTape(const Var<T>& loss) : loss_(loss) {
    if (!loss.defined()) throw std::invalid_argument("backward on an undefined tensor");
    if (loss.size() != 1) {
        throw std::invalid_argument("backward requires a scalar loss, got shape " +
                                    shape_string(loss.shape()));
    }
    if (!loss.requires_grad()) return;

    // Iterative post-order DFS: a node is emitted after all of its parents.
    std::unordered_set<const detail::Node<T>*> seen;
    std::vector<std::pair<detail::Node<T>*, std::size_t>> stack;
    stack.emplace_back(loss.node(), 0);
    seen.insert(loss.node());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            detail::Node<T>* p = node->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order_.push_back(node);
            stack.pop_back();
        }
    }
}

template <class T>
Gradients<T> GradTape<T>::backward() const {
    Gradients<T> out;
    if (order_.empty()) return out;
    for (detail::Node<T>* n : order_) n->grad.assign(n->value.size(), T(0));
    order_.back()->grad[0] = T(1);
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
        detail::Node<T>* n = *it;
        if (n->backward) n->backward(*n);
    }
    for (detail::Node<T>* n : order_) {
        if (n->is_leaf) out.grads_.emplace(n, &n->grad);
    }
    return out;
}

template class Var<float>;
template class Var<double>;
template class Gradients<float>;
template class Gradients<double>;
template class GradTape<float>;
template class GradTape<double>;

}  // namespace sharp::tk
