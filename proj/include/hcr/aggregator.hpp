// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "hcr/rng.hpp"
#include "hcr/tensor.hpp"

namespace hcr {

// Learned soft-cluster aggregation: m slot-weight distributions over the n
// input tokens (softmax along the token axis of X*W) applied to an MLP
// transform h(X) with channel pattern D-2D-D. Each output slot is a convex
// combination of transformed tokens.
struct AggregatorParams {
    Tensor W;  // D x m slot logit projection
    Tensor h1; // D x 2D
    Tensor b1; // 1 x 2D
    Tensor h2; // 2D x D
    Tensor b2; // 1 x D
    int slots() const { return W.cols(); }
};

// One modality's trainable stack: per-token projection standing in for a
// full encoder, optional learned positional table (token order sensitivity),
// and the two aggregation stages. Visual and text heads share nothing.
struct ModalityHead {
    Tensor proj;   // D_in x D
    Tensor proj_b; // 1 x D
    Tensor pos;    // n_max x D; undefined when positional is off
    AggregatorParams agg_mid;    // m = N_c (visual) or N_p (text)
    AggregatorParams agg_global; // m = 1
};

// Three-level representation of one item. Raw tensors feed aggregation;
// the *_n copies have unit rows and are what similarities consume.
struct HierarchicalEmbedding {
    Tensor tokens, mid, global;
    Tensor tokens_n, mid_n, global_n;
};

// Registers aggregator parameters under `prefix` and initializes them from a
// symmetric uniform distribution scaled by 1/sqrt(fan_in); biases zero.
AggregatorParams make_aggregator(ParamSet& params, const std::string& prefix, int dim, int slots,
                                 Rng& rng);

ModalityHead make_head(ParamSet& params, const std::string& prefix, int dim_in, int dim,
                       int mid_slots, int n_max, bool positional, Rng& rng);

// softmax_over_token_axis(X*W)^T * h(X); every slot's weights sum to 1 over
// the n input tokens, so the result is permutation-invariant in the tokens.
Tensor aggregate(const Tensor& x, const AggregatorParams& p);

// tokens = X*proj + bias (+ pos rows when enabled); mid = aggregate(tokens);
// global = aggregate(mid).
HierarchicalEmbedding encode_hierarchy(const Tensor& x_raw, const ModalityHead& head);

} // namespace hcr
