// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hcr/aggregator.hpp"
#include "hcr/mat.hpp"

namespace hcr {

// Rank-based retrieval quality in one direction. Ranks are 1-indexed; ties
// rank optimistically (only strictly greater scores count) and the number of
// tied comparisons is surfaced so optimistic ranking is auditable.
struct RetrievalReport {
    std::string direction; // "text-video" or "video-text"
    double r1 = 0.0, r5 = 0.0, r10 = 0.0; // percentages
    double mdr = 0.0; // median rank (lower middle for even counts)
    double mnr = 0.0; // mean rank
    long tie_count = 0; // total score ties with the true item over all queries
};

// Rows of `scores` are queries; truth[q] is the correct column of query q.
RetrievalReport rank_metrics(const Mat& scores, const std::vector<int>& truth,
                             const std::string& direction);

// Dual-softmax re-scoring: P[i,j] = softmax_j(gamma*S[i,:])[j] *
// softmax_i(gamma*S[:,j])[i]. Inference-time only.
Mat dual_softmax(const Mat& scores, double gamma);

// The two factors separately: rows of `row_factor` sum to 1, columns of
// `col_factor` sum to 1.
struct DualSoftmaxFactors {
    Mat row_factor, col_factor;
};
DualSoftmaxFactors dual_softmax_factors(const Mat& scores, double gamma);

// CSV with header `direction,r1,r5,r10,mdr,mnr,tie_count`.
std::string reports_to_csv(const std::vector<RetrievalReport>& reports);
std::vector<RetrievalReport> parse_reports_csv(const std::string& csv);

// ---- fine-grained matching dumps ---------------------------------------------

struct WordMatch {
    int word = 0;
    int best_frame = 0;
    double similarity = 0.0;
};

struct SlotSummary {
    int slot = 0;
    std::vector<int> top_tokens;      // descending weight, ties to lowest index
    std::vector<double> top_weights;  // softmax weights, subset sums to <= 1
};

struct MatchingRecord {
    std::vector<WordMatch> word_matches;   // per word: argmax frame + cosine
    std::vector<SlotSummary> clip_slots;   // per clip slot: top-3 frames
    std::vector<SlotSummary> phrase_slots; // per phrase slot: top-3 words
};

// Fine-grained diagnostics for one video-text pair. Heads are needed to
// recover the aggregation weight columns.
MatchingRecord matching_dump(const HierarchicalEmbedding& video,
                             const HierarchicalEmbedding& text, const ModalityHead& video_head,
                             const ModalityHead& text_head);

// Two tables: `word_index,word_best_frame,similarity` then
// `slot_index,top_tokens,top_weights` (clip slots, then phrase slots);
// list fields are ';'-separated.
void write_matching_csv(const MatchingRecord& record, std::ostream& out);

} // namespace hcr
