// SPDX-License-Identifier: Apache-2.0

#include "hcr/objectives.hpp"

#include <algorithm>
#include <cmath>

namespace hcr {

// ---- BatchLabels -----------------------------------------------------------

BatchLabels BatchLabels::identity(int n) {
    std::vector<std::vector<int>> pos(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pos[static_cast<std::size_t>(i)] = {i};
    return from_positive_sets(n, std::move(pos));
}

BatchLabels BatchLabels::from_positive_sets(int n, std::vector<std::vector<int>> pos) {
    if (n < 1) throw ContractError("BatchLabels: batch size must be >= 1");
    if (pos.size() != static_cast<std::size_t>(n)) {
        throw ContractError("BatchLabels: need one positive set per item");
    }
    BatchLabels out;
    out.n_ = n;
    out.pos_.resize(static_cast<std::size_t>(n));
    out.neg_.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto& p = pos[static_cast<std::size_t>(i)];
        p.push_back(i); // self is always positive
        std::sort(p.begin(), p.end());
        p.erase(std::unique(p.begin(), p.end()), p.end());
        if (p.front() < 0 || p.back() >= n) {
            throw ContractError("BatchLabels: positive index outside batch of " +
                                std::to_string(n));
        }
        auto& neg = out.neg_[static_cast<std::size_t>(i)];
        std::size_t pi = 0;
        for (int j = 0; j < n; ++j) {
            if (pi < p.size() && p[pi] == j) {
                ++pi;
            } else {
                neg.push_back(j);
            }
        }
        out.pos_[static_cast<std::size_t>(i)] = std::move(p);
    }
    return out;
}

// ---- InfoNCE ---------------------------------------------------------------

namespace {

// One direction of the positive-set InfoNCE: anchors index rows of `scores`.
// Appends one (numerator - logsumexp(denominator)) scalar per positive.
void infonce_direction(const Tensor& scores, const BatchLabels& labels,
                       std::vector<Tensor>& terms) {
    const int n = labels.size();
    for (int i = 0; i < n; ++i) {
        const auto& neg = labels.negatives(i);
        for (int k : labels.positives(i)) {
            const Tensor num = slice(scores, i, i + 1, k, k + 1);
            Tensor den_row;
            if (static_cast<int>(neg.size()) + 1 == n) {
                // pos_i = {k}: the denominator set is the whole row.
                den_row = slice(scores, i, i + 1, 0, n);
            } else {
                // neg_i + {k}, ascending, so summation order matches the
                // full-row path bit for bit when the sets coincide.
                std::vector<Tensor> entries;
                entries.reserve(neg.size() + 1);
                bool placed = false;
                for (int j : neg) {
                    if (!placed && k < j) {
                        entries.push_back(num);
                        placed = true;
                    }
                    entries.push_back(slice(scores, i, i + 1, j, j + 1));
                }
                if (!placed) entries.push_back(num);
                den_row = concat(entries, /*axis=*/1);
            }
            terms.push_back(sub(num, logsumexp(den_row, /*axis=*/1)));
        }
    }
}

void require_square(const Tensor& scores, const BatchLabels& labels, const char* op) {
    if (scores.rows() != scores.cols()) {
        throw ShapeError(std::string(op) + ": score matrix is " + std::to_string(scores.rows()) +
                         "x" + std::to_string(scores.cols()) + ", expected square");
    }
    if (scores.rows() != labels.size()) {
        throw ShapeError(std::string(op) + ": labels cover " + std::to_string(labels.size()) +
                         " items, matrix has " + std::to_string(scores.rows()));
    }
}

Tensor maybe_scale(const Tensor& scores, const Tensor& logit_scale) {
    return logit_scale.defined() ? scale_by(scores, logit_scale) : scores;
}

void require_batch(std::span<const HierarchicalEmbedding> videos,
                   std::span<const HierarchicalEmbedding> texts, const BatchLabels& labels,
                   const char* op) {
    if (videos.size() != texts.size()) {
        throw ShapeError(std::string(op) + ": " + std::to_string(videos.size()) + " videos vs " +
                         std::to_string(texts.size()) + " texts");
    }
    if (static_cast<int>(videos.size()) != labels.size()) {
        throw ShapeError(std::string(op) + ": labels do not match batch size");
    }
    if (videos.size() < 2) {
        throw ContractError(std::string(op) + ": degenerate batch of " +
                            std::to_string(videos.size()) + " (need >= 2)");
    }
}

} // namespace

Tensor infonce_positive_set(const Tensor& scores, const BatchLabels& labels) {
    require_square(scores, labels, "infonce_positive_set");
    std::vector<Tensor> terms;
    infonce_direction(scores, labels, terms);
    infonce_direction(transpose(scores), labels, terms);
    const double norm = -1.0 / (2.0 * static_cast<double>(labels.size()));
    return scalar_mul(sum_all(concat(terms, /*axis=*/1)), norm);
}

HciTerms loss_hci_terms(std::span<const HierarchicalEmbedding> videos,
                        std::span<const HierarchicalEmbedding> texts, const BatchLabels& labels,
                        const LossWeights& w, const Tensor& logit_scale) {
    require_batch(videos, texts, labels, "loss_hci");
    HciTerms out;
    out.token_scores = score_matrix(videos, texts, Granularity::token, w.granularity()).values;
    out.mid_scores = score_matrix(videos, texts, Granularity::mid, w.granularity()).values;
    out.global_scores = score_matrix(videos, texts, Granularity::global, w.granularity()).values;
    const Tensor l_tok = infonce_positive_set(maybe_scale(out.token_scores, logit_scale), labels);
    const Tensor l_mid = infonce_positive_set(maybe_scale(out.mid_scores, logit_scale), labels);
    const Tensor l_glob =
        infonce_positive_set(maybe_scale(out.global_scores, logit_scale), labels);
    out.loss = add(add(l_tok, scalar_mul(l_mid, w.alpha)), scalar_mul(l_glob, w.beta));
    return out;
}

Tensor loss_hci(std::span<const HierarchicalEmbedding> videos,
                std::span<const HierarchicalEmbedding> texts, const BatchLabels& labels,
                const LossWeights& w) {
    return loss_hci_terms(videos, texts, labels, w).loss;
}

HardestIndices select_hardest(const Mat& combined_scores, const BatchLabels& labels) {
    const int n = labels.size();
    if (combined_scores.rows != n || combined_scores.cols != n) {
        throw ShapeError("select_hardest: matrix does not match batch size");
    }
    HardestIndices out;
    out.video_for_text.assign(static_cast<std::size_t>(n), -1);
    out.text_for_video.assign(static_cast<std::size_t>(n), -1);
    for (int i = 0; i < n; ++i) {
        const auto& neg = labels.negatives(i);
        int best_col = -1, best_row = -1;
        for (int j : neg) { // ascending, so strict > keeps the lowest index
            if (best_col < 0 || combined_scores.at(i, j) > combined_scores.at(i, best_col)) {
                best_col = j;
            }
            if (best_row < 0 || combined_scores.at(j, i) > combined_scores.at(best_row, i)) {
                best_row = j;
            }
        }
        out.video_for_text[static_cast<std::size_t>(i)] = best_col;
        out.text_for_video[static_cast<std::size_t>(i)] = best_row;
    }
    return out;
}

Tensor loss_hsm(const Tensor& global_scores, const HardestIndices& hardest, double theta) {
    if (theta < 0.0) throw ConfigError("loss_hsm: negative margin " + std::to_string(theta));
    const int n = global_scores.rows();
    if (global_scores.cols() != n) throw ShapeError("loss_hsm: score matrix must be square");
    if (hardest.video_for_text.size() != static_cast<std::size_t>(n) ||
        hardest.text_for_video.size() != static_cast<std::size_t>(n)) {
        throw ShapeError("loss_hsm: hardest indices do not match batch size");
    }
    std::vector<Tensor> items;
    items.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int j = hardest.text_for_video[static_cast<std::size_t>(i)];  // hardest text for video i
        const int k = hardest.video_for_text[static_cast<std::size_t>(i)];  // hardest video for text i
        if (j < 0 && k < 0) {
            items.push_back(Tensor::zeros(1, 1));
            continue;
        }
        const Tensor pos = slice(global_scores, i, i + 1, i, i + 1);
        // hinge(x) = relu(x + theta); subgradient 0 exactly at the kink
        const Tensor video_side =
            j >= 0 ? relu(add_scalar(sub(slice(global_scores, j, j + 1, i, i + 1), pos), theta))
                   : Tensor::zeros(1, 1);
        const Tensor text_side =
            k >= 0 ? relu(add_scalar(sub(slice(global_scores, i, i + 1, k, k + 1), pos), theta))
                   : Tensor::zeros(1, 1);
        items.push_back(scalar_mul(add(video_side, text_side), 0.5));
    }
    return mean_all(concat(items, /*axis=*/1));
}

Tensor baseline_gdp(std::span<const HierarchicalEmbedding> videos,
                    std::span<const HierarchicalEmbedding> texts, const BatchLabels& labels) {
    require_batch(videos, texts, labels, "baseline_gdp");
    const Tensor s = score_matrix(videos, texts, Granularity::global, {}).values;
    return infonce_positive_set(s, labels);
}

Tensor baseline_twi(std::span<const HierarchicalEmbedding> videos,
                    std::span<const HierarchicalEmbedding> texts, const BatchLabels& labels) {
    require_batch(videos, texts, labels, "baseline_twi");
    const Tensor s = score_matrix(videos, texts, Granularity::token, {}).values;
    return infonce_positive_set(s, labels);
}

TotalLoss total_loss(std::span<const HierarchicalEmbedding> videos,
                     std::span<const HierarchicalEmbedding> texts, const BatchLabels& labels,
                     const LossWeights& w, LossVariant variant, bool with_hsm,
                     const Tensor& logit_scale) {
    require_batch(videos, texts, labels, "total_loss");
    TotalLoss out;
    Tensor token_s, mid_s, global_s;
    switch (variant) {
    case LossVariant::hci: {
        HciTerms terms = loss_hci_terms(videos, texts, labels, w, logit_scale);
        token_s = terms.token_scores;
        mid_s = terms.mid_scores;
        global_s = terms.global_scores;
        out.contrastive = terms.loss;
        break;
    }
    case LossVariant::gdp:
        global_s = score_matrix(videos, texts, Granularity::global, w.granularity()).values;
        out.contrastive = infonce_positive_set(maybe_scale(global_s, logit_scale), labels);
        break;
    case LossVariant::twi:
        token_s = score_matrix(videos, texts, Granularity::token, w.granularity()).values;
        out.contrastive = infonce_positive_set(maybe_scale(token_s, logit_scale), labels);
        break;
    }

    if (!with_hsm) {
        out.total = out.contrastive;
        return out;
    }

    // Selection ranks by the combined score regardless of variant; the
    // triplet itself applies at the global level.
    if (!token_s.defined()) {
        token_s = score_matrix(videos, texts, Granularity::token, w.granularity()).values;
    }
    if (!mid_s.defined()) {
        mid_s = score_matrix(videos, texts, Granularity::mid, w.granularity()).values;
    }
    if (!global_s.defined()) {
        global_s = score_matrix(videos, texts, Granularity::global, w.granularity()).values;
    }
    Mat combined = token_s.mat();
    const auto& mv = mid_s.values();
    const auto& gv = global_s.values();
    for (std::size_t idx = 0; idx < combined.v.size(); ++idx) {
        combined.v[idx] += w.alpha * mv[idx] + w.beta * gv[idx];
    }
    out.hsm = loss_hsm(global_s, select_hardest(combined, labels), w.theta);
    out.total = add(out.contrastive, scalar_mul(out.hsm, w.lambda));
    return out;
}

} // namespace hcr
