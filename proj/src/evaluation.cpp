// SPDX-License-Identifier: Apache-2.0

#include "hcr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

namespace hcr {

RetrievalReport rank_metrics(const Mat& scores, const std::vector<int>& truth,
                             const std::string& direction) {
    if (truth.size() != static_cast<std::size_t>(scores.rows)) {
        throw ContractError("rank_metrics: need one truth column per query row");
    }
    RetrievalReport rep;
    rep.direction = direction;
    std::vector<double> ranks(truth.size());
    for (int q = 0; q < scores.rows; ++q) {
        const int t = truth[static_cast<std::size_t>(q)];
        if (t < 0 || t >= scores.cols) {
            throw ContractError("rank_metrics: truth column " + std::to_string(t) +
                                " outside matrix with " + std::to_string(scores.cols) +
                                " columns");
        }
        const double target = scores.at(q, t);
        int greater = 0;
        long ties = 0;
        for (int c = 0; c < scores.cols; ++c) {
            if (c == t) continue;
            if (scores.at(q, c) > target) ++greater;
            else if (scores.at(q, c) == target) ++ties;
        }
        ranks[static_cast<std::size_t>(q)] = 1.0 + greater;
        rep.tie_count += ties;
    }

    const double n = static_cast<double>(ranks.size());
    auto at_k = [&](double k) {
        const auto hits = std::count_if(ranks.begin(), ranks.end(),
                                        [k](double r) { return r <= k; });
        return 100.0 * static_cast<double>(hits) / n;
    };
    rep.r1 = at_k(1);
    rep.r5 = at_k(5);
    rep.r10 = at_k(10);

    std::vector<double> sorted = ranks;
    std::sort(sorted.begin(), sorted.end());
    rep.mdr = sorted[(sorted.size() - 1) / 2]; // lower middle for even counts
    rep.mnr = std::accumulate(ranks.begin(), ranks.end(), 0.0) / n;
    return rep;
}

DualSoftmaxFactors dual_softmax_factors(const Mat& scores, double gamma) {
    if (gamma <= 0.0) throw ConfigError("dual_softmax: gamma must be > 0");
    const int rows = scores.rows, cols = scores.cols;

    auto softmax_line = [gamma](const std::vector<double>& line) {
        std::vector<double> out(line.size());
        double mx = line[0] * gamma;
        for (double x : line) mx = std::max(mx, x * gamma);
        double z = 0.0;
        for (std::size_t i = 0; i < line.size(); ++i) {
            out[i] = std::exp(line[i] * gamma - mx);
            z += out[i];
        }
        for (auto& x : out) x /= z;
        return out;
    };

    DualSoftmaxFactors f{Mat(rows, cols), Mat(rows, cols)};
    std::vector<double> line;
    for (int i = 0; i < rows; ++i) {
        line.assign(scores.row(i), scores.row(i) + cols);
        const auto sm = softmax_line(line);
        std::copy(sm.begin(), sm.end(), f.row_factor.row(i));
    }
    for (int j = 0; j < cols; ++j) {
        line.resize(static_cast<std::size_t>(rows));
        for (int i = 0; i < rows; ++i) line[static_cast<std::size_t>(i)] = scores.at(i, j);
        const auto sm = softmax_line(line);
        for (int i = 0; i < rows; ++i) f.col_factor.at(i, j) = sm[static_cast<std::size_t>(i)];
    }
    return f;
}

Mat dual_softmax(const Mat& scores, double gamma) {
    const DualSoftmaxFactors f = dual_softmax_factors(scores, gamma);
    Mat out(scores.rows, scores.cols);
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] = f.row_factor.v[i] * f.col_factor.v[i];
    return out;
}

std::string reports_to_csv(const std::vector<RetrievalReport>& reports) {
    std::ostringstream os;
    os << "direction,r1,r5,r10,mdr,mnr,tie_count\n";
    os.precision(6);
    os << std::fixed;
    for (const auto& r : reports) {
        os << r.direction << "," << r.r1 << "," << r.r5 << "," << r.r10 << "," << r.mdr << ","
           << r.mnr << "," << r.tie_count << "\n";
    }
    return os.str();
}

std::vector<RetrievalReport> parse_reports_csv(const std::string& csv) {
    std::istringstream is(csv);
    std::string line;
    if (!std::getline(is, line) || line != "direction,r1,r5,r10,mdr,mnr,tie_count") {
        throw ParseError("report csv: missing or unexpected header");
    }
    std::vector<RetrievalReport> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        RetrievalReport r;
        auto next = [&]() {
            if (!std::getline(ls, field, ',')) throw ParseError("report csv: short row");
            return field;
        };
        r.direction = next();
        r.r1 = std::stod(next());
        r.r5 = std::stod(next());
        r.r10 = std::stod(next());
        r.mdr = std::stod(next());
        r.mnr = std::stod(next());
        r.tie_count = std::stol(next());
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

// Aggregation weight columns for a slot bank: softmax over the token axis of
// tokens * W, returned as slots x tokens.
Mat slot_weights(const Tensor& tokens, const Tensor& w) {
    const Tensor logits = softmax(matmul(tokens, w), /*axis=*/0); // tokens x slots
    Mat m = logits.mat();
    Mat out(m.cols, m.rows);
    for (int i = 0; i < m.rows; ++i) {
        for (int j = 0; j < m.cols; ++j) out.at(j, i) = m.at(i, j);
    }
    return out;
}

std::vector<SlotSummary> summarize_slots(const Mat& weights) {
    std::vector<SlotSummary> out;
    for (int s = 0; s < weights.rows; ++s) {
        SlotSummary sum;
        sum.slot = s;
        std::vector<int> idx(static_cast<std::size_t>(weights.cols));
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
            return weights.at(s, a) > weights.at(s, b);
        });
        const int k = std::min(3, weights.cols);
        for (int i = 0; i < k; ++i) {
            sum.top_tokens.push_back(idx[static_cast<std::size_t>(i)]);
            sum.top_weights.push_back(weights.at(s, idx[static_cast<std::size_t>(i)]));
        }
        out.push_back(std::move(sum));
    }
    return out;
}

} // namespace

MatchingRecord matching_dump(const HierarchicalEmbedding& video,
                             const HierarchicalEmbedding& text, const ModalityHead& video_head,
                             const ModalityHead& text_head) {
    MatchingRecord rec;

    // Per-word best frame over the unit token rows.
    const Mat sims = matmul(text.tokens_n, transpose(video.tokens_n)).mat();
    for (int w = 0; w < sims.rows; ++w) {
        WordMatch match;
        match.word = w;
        match.best_frame = 0;
        for (int f = 1; f < sims.cols; ++f) {
            if (sims.at(w, f) > sims.at(w, match.best_frame)) match.best_frame = f;
        }
        match.similarity = sims.at(w, match.best_frame);
        rec.word_matches.push_back(match);
    }

    rec.clip_slots = summarize_slots(slot_weights(video.tokens, video_head.agg_mid.W));
    rec.phrase_slots = summarize_slots(slot_weights(text.tokens, text_head.agg_mid.W));
    return rec;
}

void write_matching_csv(const MatchingRecord& record, std::ostream& out) {
    out << "word_index,word_best_frame,similarity\n";
    out.precision(6);
    out << std::fixed;
    for (const auto& m : record.word_matches) {
        out << m.word << "," << m.best_frame << "," << m.similarity << "\n";
    }
    auto write_slots = [&out](const char* label, const std::vector<SlotSummary>& slots) {
        out << "\n# " << label << "\n";
        out << "slot_index,top_tokens,top_weights\n";
        for (const auto& s : slots) {
            out << s.slot << ",";
            for (std::size_t i = 0; i < s.top_tokens.size(); ++i) {
                out << (i ? ";" : "") << s.top_tokens[i];
            }
            out << ",";
            for (std::size_t i = 0; i < s.top_weights.size(); ++i) {
                out << (i ? ";" : "") << s.top_weights[i];
            }
            out << "\n";
        }
    };
    write_slots("clip slots (video tokens)", record.clip_slots);
    write_slots("phrase slots (text tokens)", record.phrase_slots);
}

} // namespace hcr
