// SPDX-License-Identifier: Apache-2.0

#include "hcr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "hcr/kernels.hpp"

namespace hcr {

using detail::TensorNode;

namespace {

// Id of the latest backward pass. Nodes stamp their grad buffer with it so a
// gradient left over from an earlier graph is never read as current. Graph
// construction and backward are single-threaded by contract.
std::uint64_t g_backward_pass = 0;

std::string shape_str(int r, int c) {
    return "[" + std::to_string(r) + "x" + std::to_string(c) + "]";
}

std::string shape_str(const Tensor& t) { return shape_str(t.rows(), t.cols()); }

void require_defined(const Tensor& t, const char* op) {
    if (!t.defined()) throw ContractError(std::string(op) + ": undefined tensor");
}

std::shared_ptr<TensorNode> new_node(int rows, int cols, std::vector<double> val,
                                     bool requires_grad) {
    if (rows <= 0 || cols <= 0) {
        throw ShapeError("tensor: extents must be positive, got " + shape_str(rows, cols));
    }
    if (val.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
        throw ShapeError("tensor: value count does not match " + shape_str(rows, cols));
    }
    auto n = std::make_shared<TensorNode>();
    n->rows = rows;
    n->cols = cols;
    n->val = std::move(val);
    n->requires_grad = requires_grad;
    return n;
}

// Accumulates alpha * g into a parent's gradient (buffer pre-sized by the
// backward pass). No-op for parents outside the gradient graph.
void accum(const std::shared_ptr<TensorNode>& p, double alpha, const double* g, std::size_t n) {
    if (!p->requires_grad) return;
    kernels::active().axpy(alpha, g, p->grad.data(), n);
}

Tensor make_op(int rows, int cols, std::vector<double> val, const std::vector<Tensor>& parents,
               std::function<void(TensorNode&)> backward) {
    auto node = new_node(rows, cols, std::move(val), false);
    for (const auto& p : parents) node->requires_grad = node->requires_grad || p.requires_grad();
    if (node->requires_grad) {
        node->parents.reserve(parents.size());
        for (const auto& p : parents) node->parents.push_back(detail::unwrap(p));
        node->backward_fn = std::move(backward);
    }
    return detail::wrap(std::move(node));
}

} // namespace

namespace detail {

Tensor wrap(std::shared_ptr<TensorNode> node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
}

std::shared_ptr<TensorNode> unwrap(const Tensor& t) { return t.node_; }

} // namespace detail

// ---- Tensor ----------------------------------------------------------------

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
    return full(rows, cols, 0.0, requires_grad);
}

Tensor Tensor::full(int rows, int cols, double value, bool requires_grad) {
    std::vector<double> v(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), value);
    return detail::wrap(new_node(rows, cols, std::move(v), requires_grad));
}

Tensor Tensor::from_values(int rows, int cols, std::vector<double> values, bool requires_grad) {
    return detail::wrap(new_node(rows, cols, std::move(values), requires_grad));
}

Tensor Tensor::from_mat(const Mat& m, bool requires_grad) {
    return detail::wrap(new_node(m.rows, m.cols, m.v, requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_values(1, 1, {value}, requires_grad);
}

int Tensor::rows() const { return node_ ? node_->rows : 0; }
int Tensor::cols() const { return node_ ? node_->cols : 0; }
std::size_t Tensor::size() const { return node_ ? node_->val.size() : 0; }
bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

const std::vector<double>& Tensor::values() const {
    require_defined(*this, "values");
    return node_->val;
}

double Tensor::at(int r, int c) const {
    require_defined(*this, "at");
    if (r < 0 || r >= rows() || c < 0 || c >= cols()) {
        throw ShapeError("at: index (" + std::to_string(r) + "," + std::to_string(c) +
                         ") outside " + shape_str(*this));
    }
    return node_->val[static_cast<std::size_t>(r) * cols() + c];
}

double Tensor::item() const {
    require_defined(*this, "item");
    if (size() != 1) throw ContractError("item: tensor is " + shape_str(*this) + ", not 1x1");
    return node_->val[0];
}

Mat Tensor::mat() const {
    require_defined(*this, "mat");
    return Mat(rows(), cols(), node_->val);
}

const std::vector<double>& Tensor::grad() const {
    require_defined(*this, "grad");
    static const std::vector<double> empty;
    if (node_->grad_pass != g_backward_pass || g_backward_pass == 0) return empty;
    return node_->grad;
}

Tensor Tensor::detach() const {
    require_defined(*this, "detach");
    return detail::wrap(new_node(rows(), cols(), node_->val, false));
}

void Tensor::backward() const {
    require_defined(*this, "backward");
    if (size() != 1) {
        throw ContractError("backward: output is " + shape_str(*this) + ", not a 1x1 scalar");
    }
    ++g_backward_pass;
    if (!node_->requires_grad) return; // nothing reachable is trainable

    // Post-order over the requires-grad subgraph: parents land before their
    // consumers, so reverse order is a valid backward schedule.
    std::vector<TensorNode*> topo;
    std::unordered_set<TensorNode*> seen;
    struct Frame {
        TensorNode* n;
        std::size_t next;
    };
    std::vector<Frame> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next < f.n->parents.size()) {
            TensorNode* p = f.n->parents[f.next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
        } else {
            topo.push_back(f.n);
            stack.pop_back();
        }
    }

    for (TensorNode* n : topo) {
        n->grad.assign(n->val.size(), 0.0);
        n->grad_pass = g_backward_pass;
    }
    node_->grad[0] = 1.0;
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        if ((*it)->backward_fn) (*it)->backward_fn(**it);
    }
}

// ---- ops -------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_defined(a, "matmul");
    require_defined(b, "matmul");
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner extents differ: " + shape_str(a) + " * " + shape_str(b));
    }
    const int m = a.rows(), k = a.cols(), n = b.cols();
    std::vector<double> out(static_cast<std::size_t>(m) * n);
    kernels::active().matmul(a.values().data(), b.values().data(), out.data(), m, k, n);
    return make_op(m, n, std::move(out), {a, b}, [m, k, n](TensorNode& self) {
        const auto& A = self.parents[0];
        const auto& B = self.parents[1];
        const double* g = self.grad.data();
        if (A->requires_grad) {
            // dA[i,p] = <g row i, B row p>
            for (int i = 0; i < m; ++i) {
                double* arow = A->grad.data() + static_cast<std::size_t>(i) * k;
                const double* grow = g + static_cast<std::size_t>(i) * n;
                for (int p = 0; p < k; ++p) {
                    arow[p] += kernels::active().dot(grow, B->val.data() + static_cast<std::size_t>(p) * n,
                                                     static_cast<std::size_t>(n));
                }
            }
        }
        if (B->requires_grad) {
            // dB[p,:] += sum_i A[i,p] * g row i
            for (int i = 0; i < m; ++i) {
                const double* grow = g + static_cast<std::size_t>(i) * n;
                const double* arow = A->val.data() + static_cast<std::size_t>(i) * k;
                for (int p = 0; p < k; ++p) {
                    kernels::active().axpy(arow[p], grow,
                                           B->grad.data() + static_cast<std::size_t>(p) * n,
                                           static_cast<std::size_t>(n));
                }
            }
        }
    });
}

Tensor transpose(const Tensor& a) {
    require_defined(a, "transpose");
    const int m = a.rows(), n = a.cols();
    std::vector<double> out(a.size());
    const auto& v = a.values();
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            out[static_cast<std::size_t>(j) * m + i] = v[static_cast<std::size_t>(i) * n + j];
        }
    }
    return make_op(n, m, std::move(out), {a}, [m, n](TensorNode& self) {
        const auto& A = self.parents[0];
        if (!A->requires_grad) return;
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < m; ++i) {
                A->grad[static_cast<std::size_t>(i) * n + j] +=
                    self.grad[static_cast<std::size_t>(j) * m + i];
            }
        }
    });
}

namespace {
void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(op) + ": shapes differ: " + shape_str(a) + " vs " +
                         shape_str(b));
    }
}
} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_defined(a, "add");
    require_defined(b, "add");
    require_same_shape(a, b, "add");
    std::vector<double> out(a.size());
    kernels::active().vadd(a.values().data(), b.values().data(), out.data(), a.size());
    return make_op(a.rows(), a.cols(), std::move(out), {a, b}, [](TensorNode& self) {
        accum(self.parents[0], 1.0, self.grad.data(), self.grad.size());
        accum(self.parents[1], 1.0, self.grad.data(), self.grad.size());
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_defined(a, "sub");
    require_defined(b, "sub");
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.size());
    kernels::active().vsub(a.values().data(), b.values().data(), out.data(), a.size());
    return make_op(a.rows(), a.cols(), std::move(out), {a, b}, [](TensorNode& self) {
        accum(self.parents[0], 1.0, self.grad.data(), self.grad.size());
        accum(self.parents[1], -1.0, self.grad.data(), self.grad.size());
    });
}

Tensor add_row_bias(const Tensor& a, const Tensor& bias) {
    require_defined(a, "add_row_bias");
    require_defined(bias, "add_row_bias");
    if (bias.rows() != 1 || bias.cols() != a.cols()) {
        throw ShapeError("add_row_bias: bias " + shape_str(bias) + " does not broadcast over " +
                         shape_str(a));
    }
    const int m = a.rows(), n = a.cols();
    std::vector<double> out(a.size());
    for (int i = 0; i < m; ++i) {
        kernels::active().vadd(a.values().data() + static_cast<std::size_t>(i) * n,
                               bias.values().data(), out.data() + static_cast<std::size_t>(i) * n,
                               static_cast<std::size_t>(n));
    }
    return make_op(m, n, std::move(out), {a, bias}, [m, n](TensorNode& self) {
        const auto& A = self.parents[0];
        const auto& B = self.parents[1];
        accum(A, 1.0, self.grad.data(), self.grad.size());
        if (B->requires_grad) {
            for (int i = 0; i < m; ++i) {
                kernels::active().axpy(1.0, self.grad.data() + static_cast<std::size_t>(i) * n,
                                       B->grad.data(), static_cast<std::size_t>(n));
            }
        }
    });
}

Tensor scalar_mul(const Tensor& a, double s) {
    require_defined(a, "scalar_mul");
    std::vector<double> out(a.size());
    kernels::active().vscale(a.values().data(), s, out.data(), a.size());
    return make_op(a.rows(), a.cols(), std::move(out), {a}, [s](TensorNode& self) {
        accum(self.parents[0], s, self.grad.data(), self.grad.size());
    });
}

Tensor add_scalar(const Tensor& a, double s) {
    require_defined(a, "add_scalar");
    std::vector<double> out(a.values());
    for (auto& x : out) x += s;
    return make_op(a.rows(), a.cols(), std::move(out), {a}, [](TensorNode& self) {
        accum(self.parents[0], 1.0, self.grad.data(), self.grad.size());
    });
}

Tensor scale_by(const Tensor& a, const Tensor& s) {
    require_defined(a, "scale_by");
    require_defined(s, "scale_by");
    if (s.size() != 1) throw ShapeError("scale_by: scale is " + shape_str(s) + ", not 1x1");
    const double sv = s.values()[0];
    std::vector<double> out(a.size());
    kernels::active().vscale(a.values().data(), sv, out.data(), a.size());
    return make_op(a.rows(), a.cols(), std::move(out), {a, s}, [sv](TensorNode& self) {
        const auto& A = self.parents[0];
        const auto& S = self.parents[1];
        accum(A, sv, self.grad.data(), self.grad.size());
        if (S->requires_grad) {
            S->grad[0] += kernels::active().dot(self.grad.data(), A->val.data(), self.grad.size());
        }
    });
}

Tensor relu(const Tensor& a) {
    require_defined(a, "relu");
    std::vector<double> out(a.values());
    for (auto& x : out) x = x > 0.0 ? x : 0.0;
    // Subgradient 0 at the kink: gradient passes only where input > 0.
    return make_op(a.rows(), a.cols(), std::move(out), {a}, [](TensorNode& self) {
        const auto& A = self.parents[0];
        if (!A->requires_grad) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            if (A->val[i] > 0.0) A->grad[i] += self.grad[i];
        }
    });
}

namespace {

// Shared line-walk for axis ops: axis 1 iterates rows (contiguous lines),
// axis 0 iterates columns (stride = cols).
struct LineIter {
    int n_lines, line_len;
    std::size_t start_stride, elem_stride;
};

LineIter lines_of(const Tensor& a, int axis, const char* op) {
    if (axis != 0 && axis != 1) {
        throw ShapeError(std::string(op) + ": axis must be 0 or 1, got " + std::to_string(axis));
    }
    if (axis == 1) {
        return {a.rows(), a.cols(), static_cast<std::size_t>(a.cols()), 1};
    }
    return {a.cols(), a.rows(), 1, static_cast<std::size_t>(a.cols())};
}

} // namespace

Tensor softmax(const Tensor& a, int axis) {
    require_defined(a, "softmax");
    const LineIter it = lines_of(a, axis, "softmax");
    std::vector<double> out(a.size());
    const auto& v = a.values();
    for (int l = 0; l < it.n_lines; ++l) {
        const std::size_t base = static_cast<std::size_t>(l) * it.start_stride;
        double mx = v[base];
        for (int i = 1; i < it.line_len; ++i) {
            mx = std::max(mx, v[base + static_cast<std::size_t>(i) * it.elem_stride]);
        }
        double z = 0.0;
        for (int i = 0; i < it.line_len; ++i) {
            const std::size_t idx = base + static_cast<std::size_t>(i) * it.elem_stride;
            out[idx] = std::exp(v[idx] - mx);
            z += out[idx];
        }
        for (int i = 0; i < it.line_len; ++i) {
            out[base + static_cast<std::size_t>(i) * it.elem_stride] /= z;
        }
    }
    return make_op(a.rows(), a.cols(), std::move(out), {a}, [it](TensorNode& self) {
        const auto& A = self.parents[0];
        if (!A->requires_grad) return;
        for (int l = 0; l < it.n_lines; ++l) {
            const std::size_t base = static_cast<std::size_t>(l) * it.start_stride;
            double gy = 0.0;
            for (int i = 0; i < it.line_len; ++i) {
                const std::size_t idx = base + static_cast<std::size_t>(i) * it.elem_stride;
                gy += self.grad[idx] * self.val[idx];
            }
            for (int i = 0; i < it.line_len; ++i) {
                const std::size_t idx = base + static_cast<std::size_t>(i) * it.elem_stride;
                A->grad[idx] += self.val[idx] * (self.grad[idx] - gy);
            }
        }
    });
}

Tensor l2_normalize_rows(const Tensor& a) {
    require_defined(a, "l2_normalize_rows");
    const int m = a.rows(), n = a.cols();
    std::vector<double> out(a.size());
    std::vector<double> norms(static_cast<std::size_t>(m));
    const auto& v = a.values();
    for (int i = 0; i < m; ++i) {
        const double* row = v.data() + static_cast<std::size_t>(i) * n;
        const double nrm = std::sqrt(kernels::active().dot(row, row, static_cast<std::size_t>(n)));
        norms[static_cast<std::size_t>(i)] = nrm;
        kernels::active().vscale(row, 1.0 / (nrm + kNormEps),
                                 out.data() + static_cast<std::size_t>(i) * n,
                                 static_cast<std::size_t>(n));
    }
    return make_op(m, n, std::move(out), {a}, [m, n, norms](TensorNode& self) {
        const auto& A = self.parents[0];
        if (!A->requires_grad) return;
        for (int i = 0; i < m; ++i) {
            const std::size_t off = static_cast<std::size_t>(i) * n;
            const double* x = A->val.data() + off;
            const double* g = self.grad.data() + off;
            const double nrm = norms[static_cast<std::size_t>(i)];
            const double d = nrm + kNormEps;
            const double gx = kernels::active().dot(g, x, static_cast<std::size_t>(n));
            const double coef = gx / (std::max(nrm, kNormEps) * d * d);
            kernels::active().axpy(1.0 / d, g, A->grad.data() + off, static_cast<std::size_t>(n));
            kernels::active().axpy(-coef, x, A->grad.data() + off, static_cast<std::size_t>(n));
        }
    });
}

Tensor max_along(const Tensor& a, int axis, std::vector<int>* argmax_out) {
    require_defined(a, "max_along");
    const LineIter it = lines_of(a, axis, "max_along");
    std::vector<double> out(static_cast<std::size_t>(it.n_lines));
    std::vector<int> arg(static_cast<std::size_t>(it.n_lines));
    const auto& v = a.values();
    for (int l = 0; l < it.n_lines; ++l) {
        const std::size_t base = static_cast<std::size_t>(l) * it.start_stride;
        if (axis == 1) {
            arg[static_cast<std::size_t>(l)] = static_cast<int>(
                kernels::active().argmax(v.data() + base, static_cast<std::size_t>(it.line_len)));
        } else {
            int best = 0;
            for (int i = 1; i < it.line_len; ++i) {
                if (v[base + static_cast<std::size_t>(i) * it.elem_stride] >
                    v[base + static_cast<std::size_t>(best) * it.elem_stride]) {
                    best = i;
                }
            }
            arg[static_cast<std::size_t>(l)] = best;
        }
        out[static_cast<std::size_t>(l)] =
            v[base + static_cast<std::size_t>(arg[static_cast<std::size_t>(l)]) * it.elem_stride];
    }
    if (argmax_out) *argmax_out = arg;
    const int out_rows = axis == 1 ? a.rows() : 1;
    const int out_cols = axis == 1 ? 1 : a.cols();
    return make_op(out_rows, out_cols, std::move(out), {a}, [it, arg](TensorNode& self) {
        const auto& A = self.parents[0];
        if (!A->requires_grad) return;
        for (int l = 0; l < it.n_lines; ++l) {
            const std::size_t idx = static_cast<std::size_t>(l) * it.start_stride +
                                    static_cast<std::size_t>(arg[static_cast<std::size_t>(l)]) *
                                        it.elem_stride;
            A->grad[idx] += self.grad[static_cast<std::size_t>(l)];
        }
    });
}

Tensor mean_all(const Tensor& a) {
    require_defined(a, "mean_all");
    const double m = kernels::active().sum(a.values().data(), a.size()) /
                     static_cast<double>(a.size());
    return make_op(1, 1, {m}, {a}, [](TensorNode& self) {
        const auto& A = self.parents[0];
        if (!A->requires_grad) return;
        const double g = self.grad[0] / static_cast<double>(A->val.size());
        for (auto& x : A->grad) x += g;
    });
}

Tensor sum_all(const Tensor& a) {
    require_defined(a, "sum_all");
    const double s = kernels::active().sum(a.values().data(), a.size());
    return make_op(1, 1, {s}, {a}, [](TensorNode& self) {
        const auto& A = self.parents[0];
        if (!A->requires_grad) return;
        const double g = self.grad[0];
        for (auto& x : A->grad) x += g;
    });
}

Tensor log_elem(const Tensor& a) {
    require_defined(a, "log");
    std::vector<double> out(a.values());
    for (auto& x : out) {
        if (x <= 0.0) throw ContractError("log: non-positive input " + std::to_string(x));
        x = std::log(x);
    }
    return make_op(a.rows(), a.cols(), std::move(out), {a}, [](TensorNode& self) {
        const auto& A = self.parents[0];
        if (!A->requires_grad) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i) A->grad[i] += self.grad[i] / A->val[i];
    });
}

Tensor exp_elem(const Tensor& a) {
    require_defined(a, "exp");
    std::vector<double> out(a.values());
    for (auto& x : out) x = std::exp(x);
    return make_op(a.rows(), a.cols(), std::move(out), {a}, [](TensorNode& self) {
        const auto& A = self.parents[0];
        if (!A->requires_grad) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i) A->grad[i] += self.grad[i] * self.val[i];
    });
}

Tensor logsumexp(const Tensor& a, int axis) {
    require_defined(a, "logsumexp");
    const LineIter it = lines_of(a, axis, "logsumexp");
    std::vector<double> out(static_cast<std::size_t>(it.n_lines));
    const auto& v = a.values();
    for (int l = 0; l < it.n_lines; ++l) {
        const std::size_t base = static_cast<std::size_t>(l) * it.start_stride;
        double mx = v[base];
        for (int i = 1; i < it.line_len; ++i) {
            mx = std::max(mx, v[base + static_cast<std::size_t>(i) * it.elem_stride]);
        }
        double z = 0.0;
        for (int i = 0; i < it.line_len; ++i) {
            z += std::exp(v[base + static_cast<std::size_t>(i) * it.elem_stride] - mx);
        }
        out[static_cast<std::size_t>(l)] = mx + std::log(z);
    }
    const int out_rows = axis == 1 ? a.rows() : 1;
    const int out_cols = axis == 1 ? 1 : a.cols();
    // Backward uses softmax(x) = exp(x - out) recovered from self.val.
    return make_op(out_rows, out_cols, std::move(out), {a}, [it](TensorNode& self) {
        const auto& A = self.parents[0];
        if (!A->requires_grad) return;
        for (int l = 0; l < it.n_lines; ++l) {
            const std::size_t base = static_cast<std::size_t>(l) * it.start_stride;
            const double lse = self.val[static_cast<std::size_t>(l)];
            const double g = self.grad[static_cast<std::size_t>(l)];
            for (int i = 0; i < it.line_len; ++i) {
                const std::size_t idx = base + static_cast<std::size_t>(i) * it.elem_stride;
                A->grad[idx] += g * std::exp(A->val[idx] - lse);
            }
        }
    });
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
    if (parts.empty()) throw ContractError("concat: empty input list");
    if (axis != 0 && axis != 1) throw ShapeError("concat: axis must be 0 or 1");
    for (const auto& p : parts) require_defined(p, "concat");
    const int fixed = axis == 0 ? parts[0].cols() : parts[0].rows();
    int total = 0;
    for (const auto& p : parts) {
        const int f = axis == 0 ? p.cols() : p.rows();
        if (f != fixed) {
            throw ShapeError("concat: part " + shape_str(p) + " incompatible with " +
                             shape_str(parts[0]));
        }
        total += axis == 0 ? p.rows() : p.cols();
    }
    const int rows = axis == 0 ? total : fixed;
    const int cols = axis == 0 ? fixed : total;
    std::vector<double> out(static_cast<std::size_t>(rows) * cols);
    if (axis == 0) {
        std::size_t off = 0;
        for (const auto& p : parts) {
            std::copy(p.values().begin(), p.values().end(), out.begin() + off);
            off += p.size();
        }
    } else {
        int coff = 0;
        for (const auto& p : parts) {
            for (int i = 0; i < rows; ++i) {
                std::copy(p.values().begin() + static_cast<std::size_t>(i) * p.cols(),
                          p.values().begin() + static_cast<std::size_t>(i + 1) * p.cols(),
                          out.begin() + static_cast<std::size_t>(i) * cols + coff);
            }
            coff += p.cols();
        }
    }
    std::vector<int> widths;
    widths.reserve(parts.size());
    for (const auto& p : parts) widths.push_back(axis == 0 ? p.rows() : p.cols());
    return make_op(rows, cols, std::move(out), parts, [axis, widths, cols](TensorNode& self) {
        std::size_t roff = 0;
        int coff = 0;
        for (std::size_t pi = 0; pi < self.parents.size(); ++pi) {
            const auto& P = self.parents[pi];
            if (axis == 0) {
                if (P->requires_grad) {
                    kernels::active().axpy(1.0, self.grad.data() + roff, P->grad.data(),
                                           P->val.size());
                }
                roff += P->val.size();
            } else {
                if (P->requires_grad) {
                    for (int i = 0; i < P->rows; ++i) {
                        kernels::active().axpy(
                            1.0, self.grad.data() + static_cast<std::size_t>(i) * cols + coff,
                            P->grad.data() + static_cast<std::size_t>(i) * P->cols,
                            static_cast<std::size_t>(P->cols));
                    }
                }
                coff += widths[pi];
            }
        }
    });
}

Tensor slice(const Tensor& a, int r0, int r1, int c0, int c1) {
    require_defined(a, "slice");
    if (r0 < 0 || r1 > a.rows() || r0 >= r1 || c0 < 0 || c1 > a.cols() || c0 >= c1) {
        throw ShapeError("slice: range [" + std::to_string(r0) + "," + std::to_string(r1) + ")x[" +
                         std::to_string(c0) + "," + std::to_string(c1) + ") invalid for " +
                         shape_str(a));
    }
    const int m = r1 - r0, n = c1 - c0;
    std::vector<double> out(static_cast<std::size_t>(m) * n);
    const auto& v = a.values();
    for (int i = 0; i < m; ++i) {
        std::copy(v.begin() + static_cast<std::size_t>(r0 + i) * a.cols() + c0,
                  v.begin() + static_cast<std::size_t>(r0 + i) * a.cols() + c1,
                  out.begin() + static_cast<std::size_t>(i) * n);
    }
    const int acols = a.cols();
    return make_op(m, n, std::move(out), {a}, [r0, c0, m, n, acols](TensorNode& self) {
        const auto& A = self.parents[0];
        if (!A->requires_grad) return;
        for (int i = 0; i < m; ++i) {
            kernels::active().axpy(1.0, self.grad.data() + static_cast<std::size_t>(i) * n,
                                   A->grad.data() + static_cast<std::size_t>(r0 + i) * acols + c0,
                                   static_cast<std::size_t>(n));
        }
    });
}

// ---- ParamSet --------------------------------------------------------------

Tensor ParamSet::add(const std::string& name, const Mat& init, bool trainable) {
    if (entries_.count(name)) throw ContractError("ParamSet: duplicate parameter '" + name + "'");
    Tensor t = Tensor::from_mat(init, trainable);
    entries_.emplace(name, Entry{t, trainable});
    order_.push_back(name);
    return t;
}

bool ParamSet::has(const std::string& name) const { return entries_.count(name) != 0; }

const Tensor& ParamSet::get(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ContractError("ParamSet: unknown parameter '" + name + "'");
    return it->second.tensor;
}

bool ParamSet::trainable(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ContractError("ParamSet: unknown parameter '" + name + "'");
    return it->second.trainable;
}

void ParamSet::set_values(const std::string& name, const std::vector<double>& values) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ContractError("ParamSet: unknown parameter '" + name + "'");
    detail::TensorNode* n = it->second.tensor.node();
    if (values.size() != n->val.size()) {
        throw ShapeError("ParamSet: value count for '" + name + "' does not match " +
                         shape_str(n->rows, n->cols));
    }
    n->val = values;
}

std::map<std::string, Mat> grad(const Tensor& loss, const ParamSet& params) {
    require_defined(loss, "grad");
    if (loss.size() != 1) {
        throw ContractError("grad: loss is " + shape_str(loss.rows(), loss.cols()) +
                            ", not a 1x1 scalar");
    }
    loss.backward();
    std::map<std::string, Mat> out;
    for (const auto& name : params.names()) {
        if (!params.trainable(name)) continue;
        const Tensor& p = params.get(name);
        Mat g(p.rows(), p.cols());
        if (p.node()->grad_pass == g_backward_pass && !p.node()->grad.empty()) {
            g.v = p.node()->grad;
        }
        out.emplace(name, std::move(g));
    }
    return out;
}

double finite_diff_check(const std::function<Tensor(std::uint64_t)>& loss_fn, ParamSet& params,
                         double step, std::uint64_t seed, std::string* worst_param) {
    const double l1 = loss_fn(seed).item();
    const double l2 = loss_fn(seed).item();
    if (l1 != l2) {
        throw DeterminismError("finite_diff_check: loss_fn is not deterministic (" +
                               std::to_string(l1) + " vs " + std::to_string(l2) + ")");
    }
    const auto analytic = grad(loss_fn(seed), params);

    double max_rel = 0.0;
    std::string worst = "none";
    for (const auto& name : params.names()) {
        if (!params.trainable(name)) continue;
        const Tensor& p = params.get(name);
        std::vector<double> base = p.values();
        const Mat& ag = analytic.at(name);
        for (std::size_t i = 0; i < base.size(); ++i) {
            std::vector<double> v = base;
            v[i] = base[i] + step;
            params.set_values(name, v);
            const double plus = loss_fn(seed).item();
            v[i] = base[i] - step;
            params.set_values(name, v);
            const double minus = loss_fn(seed).item();
            params.set_values(name, base);
            const double numeric = (plus - minus) / (2.0 * step);
            const double a = ag.v[i];
            const double rel = std::abs(a - numeric) /
                               std::max(1e-8, std::abs(a) + std::abs(numeric));
            if (rel > max_rel) {
                max_rel = rel;
                worst = name + "[" + std::to_string(i) + "]";
            }
        }
    }
    if (worst_param) *worst_param = worst;
    return max_rel;
}

} // namespace hcr
