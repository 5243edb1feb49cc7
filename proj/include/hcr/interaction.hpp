// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "hcr/aggregator.hpp"
#include "hcr/tensor.hpp"

namespace hcr {

// Relative weights of the mid-level and global terms against the token term.
struct GranularityWeights {
    double alpha = 0.5;
    double beta = 0.1;
};

enum class Granularity { token, mid, global, combined };

// Pairwise cross-modal similarities: rows index text items, columns index
// video items. Square for training batches; evaluation may be rectangular.
struct ScoreMatrix {
    Tensor values;
    Granularity granularity = Granularity::combined;
};

// Token-wise interaction between two unit-row token sets:
//   1/2 * ( mean_j max_i <B_j, A_i>  +  mean_i max_j <A_i, B_j> ).
// Symmetric in its arguments and bounded by 1 in magnitude.
Tensor token_interaction(const Tensor& a, const Tensor& b);

// Cosine of two unit 1xD rows (plain dot product).
Tensor global_similarity(const Tensor& a, const Tensor& b);

// TI(tokens) + alpha * TI(mid) + beta * cosine(global). The retrieval-time
// ranking score; monotone in each component.
Tensor combined_score(const HierarchicalEmbedding& video, const HierarchicalEmbedding& text,
                      const GranularityWeights& w);

ScoreMatrix score_matrix(std::span<const HierarchicalEmbedding> videos,
                         std::span<const HierarchicalEmbedding> texts, Granularity granularity,
                         const GranularityWeights& w);

} // namespace hcr
