// SPDX-License-Identifier: Apache-2.0

#include "hcr/aggregator.hpp"

#include <cmath>

namespace hcr {

namespace {

Mat uniform_init(int rows, int cols, int fan_in, Rng& rng) {
    Mat m(rows, cols);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : m.v) v = rng.uniform(-bound, bound);
    return m;
}

} // namespace

AggregatorParams make_aggregator(ParamSet& params, const std::string& prefix, int dim, int slots,
                                 Rng& rng) {
    if (slots < 1) throw ConfigError("aggregator '" + prefix + "': slots must be >= 1");
    AggregatorParams p;
    p.W = params.add(prefix + ".W", uniform_init(dim, slots, dim, rng));
    p.h1 = params.add(prefix + ".h1", uniform_init(dim, 2 * dim, dim, rng));
    p.b1 = params.add(prefix + ".b1", Mat(1, 2 * dim));
    p.h2 = params.add(prefix + ".h2", uniform_init(2 * dim, dim, 2 * dim, rng));
    p.b2 = params.add(prefix + ".b2", Mat(1, dim));
    return p;
}

ModalityHead make_head(ParamSet& params, const std::string& prefix, int dim_in, int dim,
                       int mid_slots, int n_max, bool positional, Rng& rng) {
    ModalityHead head;
    head.proj = params.add(prefix + ".proj", uniform_init(dim_in, dim, dim_in, rng));
    head.proj_b = params.add(prefix + ".proj_b", Mat(1, dim));
    if (positional) {
        // Zero init keeps a fresh head permutation-invariant until trained.
        head.pos = params.add(prefix + ".pos", Mat(n_max, dim));
    }
    head.agg_mid = make_aggregator(params, prefix + ".agg_mid", dim, mid_slots, rng);
    head.agg_global = make_aggregator(params, prefix + ".agg_global", dim, 1, rng);
    return head;
}

Tensor aggregate(const Tensor& x, const AggregatorParams& p) {
    if (!x.defined()) throw ContractError("aggregate: empty input");
    if (x.cols() != p.W.rows()) {
        throw ShapeError("aggregate: input width " + std::to_string(x.cols()) +
                         " does not match W rows " + std::to_string(p.W.rows()));
    }
    const Tensor weights = softmax(matmul(x, p.W), /*axis=*/0); // n x m, columns sum to 1
    const Tensor hidden = relu(add_row_bias(matmul(x, p.h1), p.b1));
    const Tensor hx = add_row_bias(matmul(hidden, p.h2), p.b2);
    return matmul(transpose(weights), hx); // m x D
}

HierarchicalEmbedding encode_hierarchy(const Tensor& x_raw, const ModalityHead& head) {
    if (!x_raw.defined()) throw ContractError("encode_hierarchy: empty input");
    if (x_raw.cols() != head.proj.rows()) {
        throw ShapeError("encode_hierarchy: feature width " + std::to_string(x_raw.cols()) +
                         " does not match projection input " + std::to_string(head.proj.rows()));
    }
    Tensor tokens = add_row_bias(matmul(x_raw, head.proj), head.proj_b);
    if (head.pos.defined()) {
        if (x_raw.rows() > head.pos.rows()) {
            throw ContractError("encode_hierarchy: " + std::to_string(x_raw.rows()) +
                                " tokens exceed positional table of " +
                                std::to_string(head.pos.rows()));
        }
        tokens = add(tokens, slice(head.pos, 0, x_raw.rows(), 0, head.pos.cols()));
    }
    HierarchicalEmbedding e;
    e.tokens = tokens;
    e.mid = aggregate(tokens, head.agg_mid);
    e.global = aggregate(e.mid, head.agg_global);
    e.tokens_n = l2_normalize_rows(e.tokens);
    e.mid_n = l2_normalize_rows(e.mid);
    e.global_n = l2_normalize_rows(e.global);
    return e;
}

} // namespace hcr
