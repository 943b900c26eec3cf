// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include "sharp/tensorkernel/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sharp::tk {

namespace {

template <class T>
using Node = detail::Node<T>;
template <class T>
using NodePtr = std::shared_ptr<Node<T>>;

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
Eigen::Map<const RowMat<T>> cmap(const Buffer<T>& v, std::size_t r, std::size_t c) {
    return Eigen::Map<const RowMat<T>>(v.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

template <class T>
Eigen::Map<RowMat<T>> mmap(Buffer<T>& v, std::size_t r, std::size_t c) {
    return Eigen::Map<RowMat<T>>(v.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

template <class T>
Var<T> make_op(Tensor<T> value, std::vector<NodePtr<T>> parents, std::function<void(Node<T>&)> bw) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->is_leaf = false;
    const bool rg = std::any_of(parents.begin(), parents.end(),
                                [](const NodePtr<T>& p) { return p->requires_grad; });
    if (rg) {
        n->requires_grad = true;
        n->parents = std::move(parents);
        n->backward = std::move(bw);
    }
    return Var<T>(std::move(n));
}

template <class T>
void require_matrix(const Var<T>& v, const char* op) {
    if (v.shape().size() != 2) {
        throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_string(v.shape()));
    }
}

template <class T>
void require_same_shape(const Var<T>& a, const Var<T>& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
    }
}

}  // namespace

template <class T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
    require_matrix(a, "matmul");
    require_matrix(b, "matmul");
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    if (b.shape()[0] != k) {
        throw ShapeError("matmul: inner dimensions differ, " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
    }
    Tensor<T> out = Tensor<T>::zeros({m, n});
    mmap(out.data, m, n).noalias() = cmap(a.value().data, m, k) * cmap(b.value().data, k, n);
    return make_op<T>(std::move(out), {a.node_ptr(), b.node_ptr()}, [m, k, n](Node<T>& self) {
        Node<T>& pa = *self.parents[0];
        Node<T>& pb = *self.parents[1];
        const auto g = cmap(self.grad, m, n);
        if (pa.requires_grad) {
            mmap(pa.ensure_grad(), m, k).noalias() += g * cmap(pb.value.data, k, n).transpose();
        }
        if (pb.requires_grad) {
            mmap(pb.ensure_grad(), k, n).noalias() += cmap(pa.value.data, m, k).transpose() * g;
        }
    });
}

template <class T>
Var<T> transpose(const Var<T>& a) {
    require_matrix(a, "transpose");
    const std::size_t r = a.shape()[0], c = a.shape()[1];
    Tensor<T> out = Tensor<T>::zeros({c, r});
    mmap(out.data, c, r) = cmap(a.value().data, r, c).transpose();
    return make_op<T>(std::move(out), {a.node_ptr()}, [r, c](Node<T>& self) {
        mmap(self.parents[0]->ensure_grad(), r, c) += cmap(self.grad, c, r).transpose();
    });
}

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
    require_same_shape(a, b, "add");
    Tensor<T> out = a.value();
    out.requires_grad = false;
    const auto& bv = b.value().data;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += bv[i];
    return make_op<T>(std::move(out), {a.node_ptr(), b.node_ptr()}, [](Node<T>& self) {
        for (int p = 0; p < 2; ++p) {
            Node<T>& par = *self.parents[p];
            if (!par.requires_grad) continue;
            auto& g = par.ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
    });
}

template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
    require_same_shape(a, b, "sub");
    Tensor<T> out = a.value();
    out.requires_grad = false;
    const auto& bv = b.value().data;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= bv[i];
    return make_op<T>(std::move(out), {a.node_ptr(), b.node_ptr()}, [](Node<T>& self) {
        Node<T>& pa = *self.parents[0];
        Node<T>& pb = *self.parents[1];
        if (pa.requires_grad) {
            auto& g = pa.ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (pb.requires_grad) {
            auto& g = pb.ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
        }
    });
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
    require_same_shape(a, b, "mul");
    Tensor<T> out = a.value();
    out.requires_grad = false;
    const auto& bv = b.value().data;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= bv[i];
    return make_op<T>(std::move(out), {a.node_ptr(), b.node_ptr()}, [](Node<T>& self) {
        Node<T>& pa = *self.parents[0];
        Node<T>& pb = *self.parents[1];
        if (pa.requires_grad) {
            auto& g = pa.ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value.data[i];
        }
        if (pb.requires_grad) {
            auto& g = pb.ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.value.data[i];
        }
    });
}

template <class T>
Var<T> scale(const Var<T>& a, const Var<T>& s) {
    if (s.size() != 1) throw ShapeError("scale: factor must hold one element, got " + shape_string(s.shape()));
    Tensor<T> out = a.value();
    out.requires_grad = false;
    const T f = s.value().data[0];
    for (T& v : out.data) v *= f;
    return make_op<T>(std::move(out), {a.node_ptr(), s.node_ptr()}, [](Node<T>& self) {
        Node<T>& pa = *self.parents[0];
        Node<T>& ps = *self.parents[1];
        if (pa.requires_grad) {
            auto& g = pa.ensure_grad();
            const T f = ps.value.data[0];
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += f * self.grad[i];
        }
        if (ps.requires_grad) {
            double acc = 0.0;
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                acc += static_cast<double>(self.grad[i]) * static_cast<double>(pa.value.data[i]);
            }
            ps.ensure_grad()[0] += static_cast<T>(acc);
        }
    });
}

template <class T>
Var<T> silu(const Var<T>& x) {
    const std::size_t n = x.size();
    Tensor<T> out = Tensor<T>::zeros(x.shape());
    Buffer<T> sig(n);
    const auto xa = Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>(x.value().data.data(), n);
    auto sa = Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>(sig.data(), n);
    sa = T(1) / (T(1) + (-xa).exp());
    Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>(out.data.data(), n) = xa * sa;
    return make_op<T>(std::move(out), {x.node_ptr()}, [n, sig = std::move(sig)](Node<T>& self) {
        Node<T>& px = *self.parents[0];
        const auto xa = Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>(px.value.data.data(), n);
        const auto sa = Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>(sig.data(), n);
        const auto ga = Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>(self.grad.data(), n);
        Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>(px.ensure_grad().data(), n) +=
            ga * sa * (T(1) + xa * (T(1) - sa));
    });
}

template <class T>
Var<T> rmsnorm(const Var<T>& x, const Var<T>& w, double eps) {
    if (w.shape().size() != 1 || x.shape().empty() || x.shape().back() != w.shape()[0]) {
        throw ShapeError("rmsnorm: last dimension of " + shape_string(x.shape()) + " does not match weight " +
                         shape_string(w.shape()));
    }
    const std::size_t d = w.shape()[0];
    const std::size_t rows = x.size() / d;
    Tensor<T> out = x.value();
    out.requires_grad = false;
    Buffer<T> inv(rows);
    const auto& wv = w.value().data;
    for (std::size_t r = 0; r < rows; ++r) {
        T* row = out.data.data() + r * d;
        T ss = 0;
        for (std::size_t i = 0; i < d; ++i) ss += row[i] * row[i];
        inv[r] = T(1) / std::sqrt(ss / static_cast<T>(d) + static_cast<T>(eps));
        for (std::size_t i = 0; i < d; ++i) row[i] = row[i] * inv[r] * wv[i];
    }
    return make_op<T>(std::move(out), {x.node_ptr(), w.node_ptr()},
                      [d, rows, inv = std::move(inv)](Node<T>& self) {
                          Node<T>& px = *self.parents[0];
                          Node<T>& pw = *self.parents[1];
                          const auto& xv = px.value.data;
                          const auto& wv = pw.value.data;
                          if (px.requires_grad) {
                              auto& gx = px.ensure_grad();
                              for (std::size_t r = 0; r < rows; ++r) {
                                  const T* g = self.grad.data() + r * d;
                                  const T* xr = xv.data() + r * d;
                                  T dot = 0;
                                  for (std::size_t i = 0; i < d; ++i) dot += g[i] * wv[i] * xr[i];
                                  const T iv = inv[r];
                                  const T c = iv * iv * iv * dot / static_cast<T>(d);
                                  for (std::size_t i = 0; i < d; ++i) gx[r * d + i] += iv * g[i] * wv[i] - c * xr[i];
                              }
                          }
                          if (pw.requires_grad) {
                              auto& gw = pw.ensure_grad();
                              for (std::size_t r = 0; r < rows; ++r) {
                                  const T* g = self.grad.data() + r * d;
                                  const T* xr = xv.data() + r * d;
                                  for (std::size_t i = 0; i < d; ++i) gw[i] += g[i] * xr[i] * inv[r];
                              }
                          }
                      });
}

template <class T>
Var<T> embedding(const Var<T>& table, std::span<const std::int32_t> ids) {
    require_matrix(table, "embedding");
    const std::size_t vocab = table.shape()[0], d = table.shape()[1];
    std::vector<std::int32_t> idx(ids.begin(), ids.end());
    Tensor<T> out = Tensor<T>::zeros({idx.size(), d});
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= vocab) {
            throw std::out_of_range("embedding: id " + std::to_string(idx[i]) + " outside [0," +
                                    std::to_string(vocab) + ")");
        }
        std::copy_n(table.value().data.begin() + static_cast<std::ptrdiff_t>(idx[i] * d), d,
                    out.data.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
    return make_op<T>(std::move(out), {table.node_ptr()}, [d, idx = std::move(idx)](Node<T>& self) {
        auto& g = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const T* src = self.grad.data() + i * d;
            T* dst = g.data() + static_cast<std::size_t>(idx[i]) * d;
            for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
        }
    });
}

template <class T>
Var<T> causal_attention(const Var<T>& q, const Var<T>& k, const Var<T>& v, std::size_t batch, std::size_t seq,
                        std::size_t n_heads) {
    require_matrix(q, "causal_attention");
    require_same_shape(q, k, "causal_attention");
    require_same_shape(q, v, "causal_attention");
    const std::size_t dm = q.shape()[1];
    if (q.shape()[0] != batch * seq || n_heads == 0 || dm % n_heads != 0) {
        throw ShapeError("causal_attention: " + shape_string(q.shape()) + " incompatible with batch=" +
                         std::to_string(batch) + " seq=" + std::to_string(seq) + " heads=" + std::to_string(n_heads));
    }
    using Strided = Eigen::OuterStride<>;
    using CMap = Eigen::Map<const RowMat<T>, 0, Strided>;
    using MMap = Eigen::Map<RowMat<T>, 0, Strided>;
    const auto S = static_cast<Eigen::Index>(seq);
    const std::size_t dh = dm / n_heads;
    const auto D = static_cast<Eigen::Index>(dh);
    const Strided stride(static_cast<Eigen::Index>(dm));
    const T sc = T(1) / std::sqrt(static_cast<T>(dh));
    Tensor<T> out = Tensor<T>::zeros({batch * seq, dm});
    // Row-major seq x seq softmax matrix per (batch, head); zero above the diagonal.
    Buffer<T> probs(batch * n_heads * seq * seq, T(0));
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t h = 0; h < n_heads; ++h) {
            const std::size_t off = b * seq * dm + h * dh;
            CMap qm(q.value().data.data() + off, S, D, stride);
            CMap km(k.value().data.data() + off, S, D, stride);
            CMap vm(v.value().data.data() + off, S, D, stride);
            Eigen::Map<RowMat<T>> pm(probs.data() + (b * n_heads + h) * seq * seq, S, S);
            pm.noalias() = (qm * km.transpose()) * sc;
            for (Eigen::Index t = 0; t < S; ++t) {
                auto row = pm.row(t).head(t + 1).array();
                row = (row - row.maxCoeff()).exp();
                row /= row.sum();
                pm.row(t).tail(S - t - 1).setZero();
            }
            MMap om(out.data.data() + off, S, D, stride);
            om.noalias() = pm * vm;
        }
    }
    return make_op<T>(
        std::move(out), {q.node_ptr(), k.node_ptr(), v.node_ptr()},
        [batch, seq, n_heads, dm, dh, sc, probs = std::move(probs)](Node<T>& self) {
            Node<T>& pq = *self.parents[0];
            Node<T>& pk = *self.parents[1];
            Node<T>& pv = *self.parents[2];
            const auto S = static_cast<Eigen::Index>(seq);
            const auto D = static_cast<Eigen::Index>(dh);
            const Strided stride(static_cast<Eigen::Index>(dm));
            RowMat<T> dp(S, S);
            for (std::size_t b = 0; b < batch; ++b) {
                for (std::size_t h = 0; h < n_heads; ++h) {
                    const std::size_t off = b * seq * dm + h * dh;
                    Eigen::Map<const RowMat<T>> pm(probs.data() + (b * n_heads + h) * seq * seq, S, S);
                    CMap go(self.grad.data() + off, S, D, stride);
                    CMap vm(pv.value.data.data() + off, S, D, stride);
                    if (pv.requires_grad) {
                        MMap gv(pv.ensure_grad().data() + off, S, D, stride);
                        gv.noalias() += pm.transpose() * go;
                    }
                    if (!pq.requires_grad && !pk.requires_grad) continue;
                    dp.noalias() = go * vm.transpose();
                    const auto rs = (dp.array() * pm.array()).rowwise().sum().eval();
                    dp = (pm.array() * (dp.array().colwise() - rs)).matrix() * sc;
                    if (pq.requires_grad) {
                        CMap km(pk.value.data.data() + off, S, D, stride);
                        MMap gq(pq.ensure_grad().data() + off, S, D, stride);
                        gq.noalias() += dp * km;
                    }
                    if (pk.requires_grad) {
                        CMap qm(pq.value.data.data() + off, S, D, stride);
                        MMap gk(pk.ensure_grad().data() + off, S, D, stride);
                        gk.noalias() += dp.transpose() * qm;
                    }
                }
            }
        });
}

template <class T>
Var<T> cross_entropy_mean(const Var<T>& logits, std::span<const std::int32_t> targets,
                          std::span<const std::uint8_t> mask) {
    require_matrix(logits, "cross_entropy_mean");
    const std::size_t m = logits.shape()[0], vocab = logits.shape()[1];
    if (targets.size() != m) {
        throw ShapeError("cross_entropy_mean: " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(m) + " rows");
    }
    if (!mask.empty() && mask.size() != m) throw ShapeError("cross_entropy_mean: mask length mismatch");
    std::vector<std::uint8_t> counted(m, 1);
    if (!mask.empty()) std::copy(mask.begin(), mask.end(), counted.begin());
    std::size_t count = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (!counted[i]) continue;
        if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= vocab) {
            throw std::out_of_range("cross_entropy_mean: target id " + std::to_string(targets[i]) +
                                    " outside [0," + std::to_string(vocab) + ")");
        }
        ++count;
    }
    if (count == 0) throw std::invalid_argument("cross_entropy_mean: no counted positions");

    const auto& lv = logits.value().data;
    Buffer<T> probs(m * vocab, T(0));
    const auto V = static_cast<Eigen::Index>(vocab);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (!counted[i]) continue;
        const auto row = Eigen::Map<const Eigen::Array<T, 1, Eigen::Dynamic>>(lv.data() + i * vocab, V);
        auto pr = Eigen::Map<Eigen::Array<T, 1, Eigen::Dynamic>>(probs.data() + i * vocab, V);
        const T mx = row.maxCoeff();
        pr = (row - mx).exp();
        const T lse = mx + std::log(pr.sum());
        total += static_cast<double>(lse) - static_cast<double>(row(targets[i]));
        pr = (row - lse).exp();
    }
    std::vector<std::int32_t> tg(targets.begin(), targets.end());
    return make_op<T>(Tensor<T>::scalar(static_cast<T>(total / static_cast<double>(count))), {logits.node_ptr()},
                      [m, vocab, count, probs = std::move(probs), tg = std::move(tg),
                       counted = std::move(counted)](Node<T>& self) {
                          auto& g = self.parents[0]->ensure_grad();
                          const T s = self.grad[0] / static_cast<T>(count);
                          for (std::size_t i = 0; i < m; ++i) {
                              if (!counted[i]) continue;
                              const T* pr = probs.data() + i * vocab;
                              T* gr = g.data() + i * vocab;
                              for (std::size_t c = 0; c < vocab; ++c) gr[c] += s * pr[c];
                              gr[tg[i]] -= s;
                          }
                      });
}

template <class T>
Var<T> mse(const Var<T>& a, const Var<T>& b) {
    require_same_shape(a, b, "mse");
    const std::size_t n = a.size();
    if (n == 0) throw std::invalid_argument("mse: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(a.value().data[i]) - static_cast<double>(b.value().data[i]);
        acc += d * d;
    }
    return make_op<T>(Tensor<T>::scalar(static_cast<T>(acc / static_cast<double>(n))), {a.node_ptr(), b.node_ptr()},
                      [n](Node<T>& self) {
                          Node<T>& pa = *self.parents[0];
                          Node<T>& pb = *self.parents[1];
                          const T s = T(2) * self.grad[0] / static_cast<T>(n);
                          if (pa.requires_grad) {
                              auto& g = pa.ensure_grad();
                              for (std::size_t i = 0; i < n; ++i) g[i] += s * (pa.value.data[i] - pb.value.data[i]);
                          }
                          if (pb.requires_grad) {
                              auto& g = pb.ensure_grad();
                              for (std::size_t i = 0; i < n; ++i) g[i] -= s * (pa.value.data[i] - pb.value.data[i]);
                          }
                      });
}

template <class T>
Var<T> sum(const Var<T>& a) {
    double acc = 0.0;
    for (const T& v : a.value().data) acc += static_cast<double>(v);
    return make_op<T>(Tensor<T>::scalar(static_cast<T>(acc)), {a.node_ptr()}, [](Node<T>& self) {
        auto& g = self.parents[0]->ensure_grad();
        for (T& v : g) v += self.grad[0];
    });
}

#define SHARP_TK_INSTANTIATE(T)                                                                            \
    template Var<T> matmul(const Var<T>&, const Var<T>&);                                                  \
    template Var<T> transpose(const Var<T>&);                                                              \
    template Var<T> add(const Var<T>&, const Var<T>&);                                                     \
    template Var<T> sub(const Var<T>&, const Var<T>&);                                                     \
    template Var<T> mul(const Var<T>&, const Var<T>&);                                                     \
    template Var<T> scale(const Var<T>&, const Var<T>&);                                                   \
    template Var<T> silu(const Var<T>&);                                                                   \
    template Var<T> rmsnorm(const Var<T>&, const Var<T>&, double);                                         \
    template Var<T> embedding(const Var<T>&, std::span<const std::int32_t>);                               \
    template Var<T> causal_attention(const Var<T>&, const Var<T>&, const Var<T>&, std::size_t, std::size_t, \
                                     std::size_t);                                                          \
    template Var<T> cross_entropy_mean(const Var<T>&, std::span<const std::int32_t>,                       \
                                       std::span<const std::uint8_t>);                                     \
    template Var<T> mse(const Var<T>&, const Var<T>&);                                                     \
    template Var<T> sum(const Var<T>&);

SHARP_TK_INSTANTIATE(float)
SHARP_TK_INSTANTIATE(double)

#undef SHARP_TK_INSTANTIATE

}  // namespace sharp::tk
