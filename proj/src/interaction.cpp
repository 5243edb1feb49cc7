// SPDX-License-Identifier: Apache-2.0

#include "hcr/interaction.hpp"

#include <cmath>

#include "hcr/kernels.hpp"

namespace hcr {

namespace {

// Rows must be unit length (or exactly zero, the guard value the normalizer
// emits for degenerate inputs). Catches raw embeddings passed by mistake.
void require_unit_rows(const Tensor& t, const char* op) {
    const auto& v = t.values();
    for (int i = 0; i < t.rows(); ++i) {
        const double* row = v.data() + static_cast<std::size_t>(i) * t.cols();
        const double nrm =
            std::sqrt(kernels::active().dot(row, row, static_cast<std::size_t>(t.cols())));
        if (nrm > 1e-9 && std::abs(nrm - 1.0) > 1e-6) {
            throw ContractError(std::string(op) + ": row " + std::to_string(i) +
                                " has norm " + std::to_string(nrm) + ", expected unit rows");
        }
    }
}

} // namespace

Tensor token_interaction(const Tensor& a, const Tensor& b) {
    if (!a.defined() || !b.defined()) throw ContractError("token_interaction: empty input");
    if (a.cols() != b.cols()) {
        throw ShapeError("token_interaction: widths differ: " + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.cols()));
    }
    require_unit_rows(a, "token_interaction");
    require_unit_rows(b, "token_interaction");
    const Tensor sims = matmul(a, transpose(b)); // na x nb
    const Tensor best_for_b = max_along(sims, /*axis=*/0); // 1 x nb
    const Tensor best_for_a = max_along(sims, /*axis=*/1); // na x 1
    return scalar_mul(add(mean_all(best_for_b), mean_all(best_for_a)), 0.5);
}

Tensor global_similarity(const Tensor& a, const Tensor& b) {
    if (!a.defined() || !b.defined()) throw ContractError("global_similarity: empty input");
    if (a.rows() != 1 || b.rows() != 1 || a.cols() != b.cols()) {
        throw ShapeError("global_similarity: expected matching 1xD rows");
    }
    require_unit_rows(a, "global_similarity");
    require_unit_rows(b, "global_similarity");
    return matmul(a, transpose(b));
}

Tensor combined_score(const HierarchicalEmbedding& video, const HierarchicalEmbedding& text,
                      const GranularityWeights& w) {
    const Tensor tok = token_interaction(text.tokens_n, video.tokens_n);
    const Tensor mid = token_interaction(text.mid_n, video.mid_n);
    const Tensor glob = global_similarity(text.global_n, video.global_n);
    return add(add(tok, scalar_mul(mid, w.alpha)), scalar_mul(glob, w.beta));
}

namespace {

// N_t x N_v matrix of per-pair TI scalars at one level.
Tensor ti_matrix(std::span<const HierarchicalEmbedding> videos,
                 std::span<const HierarchicalEmbedding> texts, bool mid_level) {
    std::vector<Tensor> rows;
    rows.reserve(texts.size());
    for (const auto& t : texts) {
        std::vector<Tensor> entries;
        entries.reserve(videos.size());
        for (const auto& v : videos) {
            entries.push_back(mid_level ? token_interaction(t.mid_n, v.mid_n)
                                        : token_interaction(t.tokens_n, v.tokens_n));
        }
        rows.push_back(concat(entries, /*axis=*/1));
    }
    return concat(rows, /*axis=*/0);
}

Tensor global_matrix(std::span<const HierarchicalEmbedding> videos,
                     std::span<const HierarchicalEmbedding> texts) {
    std::vector<Tensor> trows, vrows;
    trows.reserve(texts.size());
    vrows.reserve(videos.size());
    for (const auto& t : texts) trows.push_back(t.global_n);
    for (const auto& v : videos) vrows.push_back(v.global_n);
    return matmul(concat(trows, 0), transpose(concat(vrows, 0)));
}

} // namespace

ScoreMatrix score_matrix(std::span<const HierarchicalEmbedding> videos,
                         std::span<const HierarchicalEmbedding> texts, Granularity granularity,
                         const GranularityWeights& w) {
    if (videos.empty() || texts.empty()) throw ContractError("score_matrix: empty item list");
    ScoreMatrix out;
    out.granularity = granularity;
    switch (granularity) {
    case Granularity::token:
        out.values = ti_matrix(videos, texts, false);
        break;
    case Granularity::mid:
        out.values = ti_matrix(videos, texts, true);
        break;
    case Granularity::global:
        out.values = global_matrix(videos, texts);
        break;
    case Granularity::combined:
        out.values = add(add(ti_matrix(videos, texts, false),
                             scalar_mul(ti_matrix(videos, texts, true), w.alpha)),
                         scalar_mul(global_matrix(videos, texts), w.beta));
        break;
    }
    return out;
}

} // namespace hcr
