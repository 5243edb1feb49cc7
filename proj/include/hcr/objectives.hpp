// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "hcr/interaction.hpp"
#include "hcr/mat.hpp"
#include "hcr/tensor.hpp"

namespace hcr {

// Per-item positive index sets within a batch. pos_i always contains i;
// neg_i is the complement. Index sets are kept sorted.
class BatchLabels {
  public:
    // The standard labels: pos_i = {i}.
    static BatchLabels identity(int n);
    // From externally discovered positive sets (the denoiser); i is inserted
    // into pos_i if missing, duplicates removed, ranges validated.
    static BatchLabels from_positive_sets(int n, std::vector<std::vector<int>> pos);

    int size() const { return n_; }
    const std::vector<int>& positives(int i) const { return pos_[static_cast<std::size_t>(i)]; }
    const std::vector<int>& negatives(int i) const { return neg_[static_cast<std::size_t>(i)]; }

  private:
    int n_ = 0;
    std::vector<std::vector<int>> pos_, neg_;
};

struct LossWeights {
    double alpha = 0.5;
    double beta = 0.1;
    double theta = 0.1;  // triplet margin
    double lambda = 0.1; // weight of the hard-sample term
    GranularityWeights granularity() const { return {alpha, beta}; }
};

// Symmetric positive-set InfoNCE over a square score matrix:
//   -(1/2N) sum_i sum_{k in pos_i} [ S[i,k] - lse_{j in neg_i + {k}} S[i,j] ]
// plus the same with S transposed. Reduces to the plain symmetric InfoNCE
// when every pos_i = {i}. Log-sum-exp stabilized.
Tensor infonce_positive_set(const Tensor& scores, const BatchLabels& labels);

// Score matrices of one batch at every level, with the hierarchical loss.
struct HciTerms {
    Tensor token_scores, mid_scores, global_scores; // N x N
    Tensor loss;
};

// InfoNCE(token TI) + alpha * InfoNCE(mid TI) + beta * InfoNCE(global cos).
// logit_scale, when defined, multiplies every contrastive logit matrix.
HciTerms loss_hci_terms(std::span<const HierarchicalEmbedding> videos,
                        std::span<const HierarchicalEmbedding> texts, const BatchLabels& labels,
                        const LossWeights& w, const Tensor& logit_scale = {});
Tensor loss_hci(std::span<const HierarchicalEmbedding> videos,
                std::span<const HierarchicalEmbedding> texts, const BatchLabels& labels,
                const LossWeights& w);

// Hardest in-batch negatives under the combined score (same alpha/beta
// weighting the hierarchical loss ranks by): per text the best-scoring
// negative video and per video the best-scoring negative text. -1 marks
// items with no negatives. Ties resolve to the lowest index.
struct HardestIndices {
    std::vector<int> video_for_text; // index j maximizing S[i, j] over neg_i
    std::vector<int> text_for_video; // index j maximizing S[j, i] over neg_i
};
HardestIndices select_hardest(const Mat& combined_scores, const BatchLabels& labels);

// Margin triplet loss at the global level against the selected hardest
// negatives, averaged over the batch. Items without negatives contribute 0.
Tensor loss_hsm(const Tensor& global_scores, const HardestIndices& hardest, double theta);

// Ablation baselines: InfoNCE on a single granularity.
Tensor baseline_gdp(std::span<const HierarchicalEmbedding> videos,
                    std::span<const HierarchicalEmbedding> texts, const BatchLabels& labels);
Tensor baseline_twi(std::span<const HierarchicalEmbedding> videos,
                    std::span<const HierarchicalEmbedding> texts, const BatchLabels& labels);

enum class LossVariant { gdp, twi, hci };

struct TotalLoss {
    Tensor total;
    Tensor contrastive;  // the variant's contrastive term
    Tensor hsm;          // undefined when the hard-sample term is disabled
};

// contrastive(variant) + lambda * L_hsm (when with_hsm). Gradients flow
// through every granularity of the selected variant.
TotalLoss total_loss(std::span<const HierarchicalEmbedding> videos,
                     std::span<const HierarchicalEmbedding> texts, const BatchLabels& labels,
                     const LossWeights& w, LossVariant variant, bool with_hsm,
                     const Tensor& logit_scale = {});

} // namespace hcr
