#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "fewgan/array.hpp"
#include "fewgan/error.hpp"

namespace fewgan::ad {

namespace kernels {

// C (+)= A * B, row-major, A: m x k, B: k x n. ikj order keeps the inner
// loop contiguous in both B and C.
inline void matmul(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (!accumulate)
        for (std::size_t i = 0; i < m * n; ++i) c[i] = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = arow[kk];
            const double* brow = b + kk * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
}

// C += A * B^T, A: m x k, B: n x k. Row-dot-row, both contiguous.
inline void matmul_nt_accum(const double* a, const double* b, double* c,
                            std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            double dot = 0.0;
            for (std::size_t kk = 0; kk < k; ++kk) dot += arow[kk] * brow[kk];
            crow[j] += dot;
        }
    }
}

// C += A^T * B, A: m x k, B: m x n, C: k x n.
inline void matmul_tn_accum(const double* a, const double* b, double* c,
                            std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        const double* brow = b + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = arow[kk];
            double* crow = c + kk * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
}

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace kernels

// Handle into a Tape node.
struct Var {
    std::size_t id = 0;
};

// Reverse-mode tape over Arrays. Nodes are appended in evaluation order, so
// node order is a topological order by construction; backward walks ids in
// reverse and accumulates into parents in that fixed order, which makes
// gradient accumulation deterministic.
//
// Single-threaded per tape; independent tapes may run concurrently.
class Tape {
public:
    Var leaf(Array value) {
        nodes_.push_back(Node{std::move(value), {}, nullptr});
        return Var{nodes_.size() - 1};
    }

    const Array& value(Var v) const { return nodes_[v.id].value; }

    // Gradient of the last backward() root w.r.t. node v.
    const Array& grad(Var v) const { return nodes_[v.id].grad; }

    std::size_t size() const { return nodes_.size(); }

    Var matmul(Var a, Var b) {
        const Array& av = nodes_[a.id].value;
        const Array& bv = nodes_[b.id].value;
        if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows())
            throw DimensionError("matmul: " + av.shape_str() + " x " + bv.shape_str());
        const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
        Array out({m, n});
        kernels::matmul(av.data.data(), bv.data.data(), out.data.data(), m, k, n, false);
        return push(std::move(out), [a, b, m, k, n](Tape& t, const Node& self) {
            const double* g = self.grad.data.data();
            // dA += g * B^T ; dB += A^T * g
            kernels::matmul_nt_accum(g, t.nodes_[b.id].value.data.data(),
                                     t.nodes_[a.id].grad.data.data(), m, n, k);
            kernels::matmul_tn_accum(t.nodes_[a.id].value.data.data(), g,
                                     t.nodes_[b.id].grad.data.data(), m, k, n);
        });
    }

    Var add(Var a, Var b) { return binary_elementwise(a, b, BinOp::add); }
    Var sub(Var a, Var b) { return binary_elementwise(a, b, BinOp::sub); }
    Var mul(Var a, Var b) { return binary_elementwise(a, b, BinOp::mul); }

    // x: batch x n, bias: n. Bias broadcasts over the batch dimension only.
    Var add_bias(Var x, Var bias) {
        const Array& xv = nodes_[x.id].value;
        const Array& bv = nodes_[bias.id].value;
        if (xv.rank() != 2 || bv.rank() != 1 || bv.shape[0] != xv.cols())
            throw DimensionError("add_bias: " + xv.shape_str() + " + " + bv.shape_str());
        const std::size_t m = xv.rows(), n = xv.cols();
        Array out({m, n});
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) out(i, j) = xv(i, j) + bv[j];
        return push(std::move(out), [x, bias, m, n](Tape& t, const Node& self) {
            Array& gx = t.nodes_[x.id].grad;
            Array& gb = t.nodes_[bias.id].grad;
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    const double g = self.grad.data[i * n + j];
                    gx.data[i * n + j] += g;
                    gb.data[j] += g;
                }
        });
    }

    Var leaky_relu(Var x, double alpha = 0.2) {
        const Array& xv = nodes_[x.id].value;
        Array out(xv.shape);
        for (std::size_t i = 0; i < xv.numel(); ++i) {
            const double v = xv[i];
            out[i] = v >= 0.0 ? v : alpha * v;
        }
        return push(std::move(out), [x, alpha](Tape& t, const Node& self) {
            const Array& xv = t.nodes_[x.id].value;
            Array& gx = t.nodes_[x.id].grad;
            for (std::size_t i = 0; i < xv.numel(); ++i)
                gx[i] += self.grad[i] * (xv[i] >= 0.0 ? 1.0 : alpha);
        });
    }

    Var tanh(Var x) {
        const Array& xv = nodes_[x.id].value;
        Array out(xv.shape);
        for (std::size_t i = 0; i < xv.numel(); ++i) out[i] = std::tanh(xv[i]);
        return push(std::move(out), [x](Tape& t, const Node& self) {
            Array& gx = t.nodes_[x.id].grad;
            for (std::size_t i = 0; i < self.value.numel(); ++i) {
                const double y = self.value[i];
                gx[i] += self.grad[i] * (1.0 - y * y);
            }
        });
    }

    Var sigmoid(Var x) {
        const Array& xv = nodes_[x.id].value;
        Array out(xv.shape);
        for (std::size_t i = 0; i < xv.numel(); ++i) out[i] = kernels::sigmoid(xv[i]);
        return push(std::move(out), [x](Tape& t, const Node& self) {
            Array& gx = t.nodes_[x.id].grad;
            for (std::size_t i = 0; i < self.value.numel(); ++i) {
                const double y = self.value[i];
                gx[i] += self.grad[i] * y * (1.0 - y);
            }
        });
    }

    Var square(Var x) {
        const Array& xv = nodes_[x.id].value;
        Array out(xv.shape);
        for (std::size_t i = 0; i < xv.numel(); ++i) out[i] = xv[i] * xv[i];
        return push(std::move(out), [x](Tape& t, const Node& self) {
            const Array& xv = t.nodes_[x.id].value;
            Array& gx = t.nodes_[x.id].grad;
            for (std::size_t i = 0; i < xv.numel(); ++i)
                gx[i] += self.grad[i] * 2.0 * xv[i];
        });
    }

    Var scale(Var x, double c) {
        const Array& xv = nodes_[x.id].value;
        Array out(xv.shape);
        for (std::size_t i = 0; i < xv.numel(); ++i) out[i] = c * xv[i];
        return push(std::move(out), [x, c](Tape& t, const Node& self) {
            Array& gx = t.nodes_[x.id].grad;
            for (std::size_t i = 0; i < self.value.numel(); ++i)
                gx[i] += self.grad[i] * c;
        });
    }

    Var sum(Var x) {
        const Array& xv = nodes_[x.id].value;
        double s = 0.0;
        for (double v : xv.data) s += v;
        return push(Array::scalar(s), [x](Tape& t, const Node& self) {
            Array& gx = t.nodes_[x.id].grad;
            const double g = self.grad[0];
            for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += g;
        });
    }

    // Mean over the batch of -[y log s(l) + (1-y) log(1-s(l))], evaluated in
    // the log-sum-exp form max(l,0) - l y + log1p(exp(-|l|)) so large logits
    // cannot overflow. Labels are a plain (non-differentiated) input.
    Var bce_with_logits(Var logits, const Array& labels) {
        const Array& lv = nodes_[logits.id].value;
        if (lv.numel() != labels.numel())
            throw DimensionError("bce_with_logits: logits " + lv.shape_str() +
                                 " vs labels " + labels.shape_str());
        if (lv.numel() == 0) throw InputError("bce_with_logits: empty batch");
        for (double y : labels.data)
            if (y != 0.0 && y != 1.0)
                throw InputError("bce_with_logits: labels must be exactly 0 or 1");
        const std::size_t n = lv.numel();
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double l = lv[i];
            const double y = labels[i];
            acc += std::max(l, 0.0) - l * y + std::log1p(std::exp(-std::fabs(l)));
        }
        Array ycopy = labels;
        return push(Array::scalar(acc / static_cast<double>(n)),
                    [logits, n, ycopy = std::move(ycopy)](Tape& t, const Node& self) {
                        const Array& lv = t.nodes_[logits.id].value;
                        Array& gl = t.nodes_[logits.id].grad;
                        const double g = self.grad[0] / static_cast<double>(n);
                        for (std::size_t i = 0; i < n; ++i)
                            gl[i] += g * (kernels::sigmoid(lv[i]) - ycopy[i]);
                    });
    }

    // Gradients of a scalar root w.r.t. every node. Resets previous gradients.
    void backward(Var root) {
        if (!is_scalar(nodes_[root.id].value))
            throw ContractError("backward: root is not scalar, shape " +
                                nodes_[root.id].value.shape_str());
        for (Node& nd : nodes_) {
            nd.grad.shape = nd.value.shape;
            nd.grad.data.assign(nd.value.numel(), 0.0);
        }
        nodes_[root.id].grad[0] = 1.0;
        for (std::size_t i = root.id + 1; i-- > 0;) {
            const Node& nd = nodes_[i];
            if (nd.backprop) nd.backprop(*this, nd);
        }
    }

private:
    struct Node;
    using Backprop = std::function<void(Tape&, const Node&)>;

    struct Node {
        Array value;
        Array grad;
        Backprop backprop;  // null for leaves
    };

    enum class BinOp { add, sub, mul };

    Var push(Array value, Backprop bp) {
        nodes_.push_back(Node{std::move(value), {}, std::move(bp)});
        return Var{nodes_.size() - 1};
    }

    Var binary_elementwise(Var a, Var b, BinOp op) {
        const Array& av = nodes_[a.id].value;
        const Array& bv = nodes_[b.id].value;
        if (!av.same_shape(bv))
            throw DimensionError("elementwise: " + av.shape_str() + " vs " + bv.shape_str());
        Array out(av.shape);
        switch (op) {
            case BinOp::add:
                for (std::size_t i = 0; i < av.numel(); ++i) out[i] = av[i] + bv[i];
                break;
            case BinOp::sub:
                for (std::size_t i = 0; i < av.numel(); ++i) out[i] = av[i] - bv[i];
                break;
            case BinOp::mul:
                for (std::size_t i = 0; i < av.numel(); ++i) out[i] = av[i] * bv[i];
                break;
        }
        return push(std::move(out), [a, b, op](Tape& t, const Node& self) {
            Array& ga = t.nodes_[a.id].grad;
            Array& gb = t.nodes_[b.id].grad;
            const std::size_t n = self.value.numel();
            switch (op) {
                case BinOp::add:
                    for (std::size_t i = 0; i < n; ++i) {
                        ga[i] += self.grad[i];
                        gb[i] += self.grad[i];
                    }
                    break;
                case BinOp::sub:
                    for (std::size_t i = 0; i < n; ++i) {
                        ga[i] += self.grad[i];
                        gb[i] -= self.grad[i];
                    }
                    break;
                case BinOp::mul:
                    for (std::size_t i = 0; i < n; ++i) {
                        ga[i] += self.grad[i] * t.nodes_[b.id].value[i];
                        gb[i] += self.grad[i] * t.nodes_[a.id].value[i];
                    }
                    break;
            }
        });
    }

    std::vector<Node> nodes_;
};

}  // namespace fewgan::ad
