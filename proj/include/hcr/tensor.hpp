// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "hcr/errors.hpp"
#include "hcr/mat.hpp"

namespace hcr {

// Reverse-mode autodiff over row-major double matrices (scalars are 1x1).
//
// Tensors are immutable value handles: every op allocates a new node holding
// its result and a closure that scatters incoming gradient to its parents.
// Graphs are rebuilt per evaluation (define-by-run); backward() walks the
// graph once in reverse topological order. Everything runs at 64-bit; 32-bit
// exists only in the on-disk feature format.

class Tensor;

namespace detail {
struct TensorNode;
Tensor wrap(std::shared_ptr<TensorNode> node);
std::shared_ptr<TensorNode> unwrap(const Tensor& t);
} // namespace detail

class Tensor {
  public:
    Tensor() = default;

    // Leaf constructors.
    static Tensor zeros(int rows, int cols, bool requires_grad = false);
    static Tensor full(int rows, int cols, double value, bool requires_grad = false);
    static Tensor from_values(int rows, int cols, std::vector<double> values,
                              bool requires_grad = false);
    static Tensor from_mat(const Mat& m, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    int rows() const;
    int cols() const;
    std::size_t size() const;
    bool requires_grad() const;

    const std::vector<double>& values() const;
    double at(int r, int c) const;
    double item() const; // 1x1 only
    Mat mat() const;

    // Gradient accumulated by the most recent backward() that reached this
    // node; empty if none has.
    const std::vector<double>& grad() const;

    // Same values, cut out of the gradient graph.
    Tensor detach() const;

    // Runs reverse-mode accumulation from this node. Contract: 1x1 output.
    // Gradients of all reachable nodes are reset before accumulation.
    void backward() const;

    detail::TensorNode* node() const { return node_.get(); }

  private:
    friend Tensor detail::wrap(std::shared_ptr<detail::TensorNode> node);
    friend std::shared_ptr<detail::TensorNode> detail::unwrap(const Tensor& t);
    std::shared_ptr<detail::TensorNode> node_;
};

namespace detail {
struct TensorNode {
    int rows = 0, cols = 0;
    std::vector<double> val;
    std::vector<double> grad;     // sized by the backward pass that reaches this node
    std::uint64_t grad_pass = 0;  // id of that pass; guards against stale reads
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward_fn;
};
} // namespace detail

// ---- op set ----------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
// a [m x n] + bias [1 x n], broadcast over rows.
Tensor add_row_bias(const Tensor& a, const Tensor& bias);
Tensor scalar_mul(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
// Elementwise multiply by a 1x1 tensor (trainable logit scaling).
Tensor scale_by(const Tensor& a, const Tensor& s);
Tensor relu(const Tensor& a);
// axis 0: softmax down each column; axis 1: along each row. Max-subtracted.
Tensor softmax(const Tensor& a, int axis);
// Rows scaled to unit Euclidean norm; denominator is norm + 1e-12 so
// degenerate all-zero rows pass through as zeros instead of failing.
Tensor l2_normalize_rows(const Tensor& a);
// Max along axis (0 -> 1 x cols, 1 -> rows x 1). Gradient routes to the
// argmax element, ties to the lowest index; *argmax_out receives the winning
// indices when non-null.
Tensor max_along(const Tensor& a, int axis, std::vector<int>* argmax_out = nullptr);
Tensor mean_all(const Tensor& a);
Tensor sum_all(const Tensor& a);
Tensor log_elem(const Tensor& a);
Tensor exp_elem(const Tensor& a);
// Stabilized log(sum(exp)) along axis (0 -> 1 x cols, 1 -> rows x 1).
Tensor logsumexp(const Tensor& a, int axis);
Tensor concat(const std::vector<Tensor>& parts, int axis);
// Half-open [r0, r1) x [c0, c1).
Tensor slice(const Tensor& a, int r0, int r1, int c0, int c1);

constexpr double kNormEps = 1e-12;

// ---- parameters ------------------------------------------------------------

// Named, ordered collection of leaf tensors. Shapes are fixed at add() time;
// values change only through set_values (the optimizer path between steps).
class ParamSet {
  public:
    Tensor add(const std::string& name, const Mat& init, bool trainable = true);
    bool has(const std::string& name) const;
    const Tensor& get(const std::string& name) const;
    bool trainable(const std::string& name) const;
    const std::vector<std::string>& names() const { return order_; }

    void set_values(const std::string& name, const std::vector<double>& values);

  private:
    struct Entry {
        Tensor tensor;
        bool trainable;
    };
    std::map<std::string, Entry> entries_;
    std::vector<std::string> order_;
};

// d(loss)/d(p) for every trainable parameter. Contract: scalar loss.
std::map<std::string, Mat> grad(const Tensor& loss, const ParamSet& params);

// Central-difference verification of the analytic gradients.
//
// loss_fn(seed) must rebuild the loss from the current parameter values and
// be deterministic for a fixed seed (this is checked: two evaluations that
// disagree raise DeterminismError). Every scalar of every trainable
// parameter is perturbed by +-step. Returns the maximum relative error
// |a - n| / max(1e-8, |a| + |n|); *worst_param names the offender.
double finite_diff_check(const std::function<Tensor(std::uint64_t)>& loss_fn,
                         ParamSet& params, double step, std::uint64_t seed,
                         std::string* worst_param = nullptr);

} // namespace hcr
