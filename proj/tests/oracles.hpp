// SPDX-License-Identifier: Apache-2.0
//
// Brute-force reference implementations used as independent oracles.
// Deliberately written with explicit loops on plain nested vectors; nothing
// here touches the library's kernels or autodiff path.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "hcr/aggregator.hpp"
#include "hcr/mat.hpp"
#include "hcr/rng.hpp"
#include "hcr/tensor.hpp"

namespace oracle {

using Grid = std::vector<std::vector<double>>;

inline Grid from_mat(const hcr::Mat& m) {
    Grid g(static_cast<std::size_t>(m.rows), std::vector<double>(static_cast<std::size_t>(m.cols)));
    for (int i = 0; i < m.rows; ++i) {
        for (int j = 0; j < m.cols; ++j) g[i][j] = m.at(i, j);
    }
    return g;
}

inline Grid from_tensor(const hcr::Tensor& t) { return from_mat(t.mat()); }

inline Grid matmul(const Grid& a, const Grid& b) {
    const std::size_t m = a.size(), k = b.size(), n = b[0].size();
    Grid c(m, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t p = 0; p < k; ++p) c[i][j] += a[i][p] * b[p][j];
        }
    }
    return c;
}

inline Grid l2norm_rows(const Grid& a) {
    Grid out = a;
    for (auto& row : out) {
        double n2 = 0.0;
        for (double x : row) n2 += x * x;
        const double d = std::sqrt(n2) + 1e-12;
        for (double& x : row) x /= d;
    }
    return out;
}

// softmax(X*W)^T h(X) with h(X) = relu(X*h1 + b1)*h2 + b2, explicit loops.
inline Grid aggregate(const Grid& x, const Grid& w, const Grid& h1, const std::vector<double>& b1,
                      const Grid& h2, const std::vector<double>& b2) {
    const std::size_t n = x.size(), slots = w[0].size(), dim = x[0].size();
    const std::size_t hidden = h1[0].size();

    Grid logits = matmul(x, w); // n x slots
    Grid weights(n, std::vector<double>(slots));
    for (std::size_t s = 0; s < slots; ++s) { // softmax down each column
        double mx = logits[0][s];
        for (std::size_t t = 1; t < n; ++t) mx = std::max(mx, logits[t][s]);
        double z = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            weights[t][s] = std::exp(logits[t][s] - mx);
            z += weights[t][s];
        }
        for (std::size_t t = 0; t < n; ++t) weights[t][s] /= z;
    }

    Grid h(n, std::vector<double>(dim, 0.0));
    for (std::size_t t = 0; t < n; ++t) {
        std::vector<double> hid(hidden, 0.0);
        for (std::size_t u = 0; u < hidden; ++u) {
            double acc = b1[u];
            for (std::size_t d = 0; d < dim; ++d) acc += x[t][d] * h1[d][u];
            hid[u] = acc > 0.0 ? acc : 0.0;
        }
        for (std::size_t d = 0; d < dim; ++d) {
            double acc = b2[d];
            for (std::size_t u = 0; u < hidden; ++u) acc += hid[u] * h2[u][d];
            h[t][d] = acc;
        }
    }

    Grid out(slots, std::vector<double>(dim, 0.0));
    for (std::size_t s = 0; s < slots; ++s) {
        for (std::size_t d = 0; d < dim; ++d) {
            for (std::size_t t = 0; t < n; ++t) out[s][d] += weights[t][s] * h[t][d];
        }
    }
    return out;
}

inline Grid aggregate(const Grid& x, const hcr::AggregatorParams& p) {
    const Grid w = from_tensor(p.W);
    const Grid h1 = from_tensor(p.h1);
    const Grid h2 = from_tensor(p.h2);
    return aggregate(x, w, h1, from_tensor(p.b1)[0], h2, from_tensor(p.b2)[0]);
}

// Token-wise interaction on unit rows: 1/2 (mean_j max_i <B_j,A_i> + mean_i max_j <A_i,B_j>).
inline double ti(const Grid& a, const Grid& b) {
    const std::size_t na = a.size(), nb = b.size(), dim = a[0].size();
    auto dot = [&](const std::vector<double>& u, const std::vector<double>& v) {
        double acc = 0.0;
        for (std::size_t d = 0; d < dim; ++d) acc += u[d] * v[d];
        return acc;
    };
    double sum_b = 0.0;
    for (std::size_t j = 0; j < nb; ++j) {
        double best = dot(b[j], a[0]);
        for (std::size_t i = 1; i < na; ++i) best = std::max(best, dot(b[j], a[i]));
        sum_b += best;
    }
    double sum_a = 0.0;
    for (std::size_t i = 0; i < na; ++i) {
        double best = dot(a[i], b[0]);
        for (std::size_t j = 1; j < nb; ++j) best = std::max(best, dot(a[i], b[j]));
        sum_a += best;
    }
    return 0.5 * (sum_b / static_cast<double>(nb) + sum_a / static_cast<double>(na));
}

// Positive-set InfoNCE, naive exponentials (fine for |S| up to ~100).
inline double infonce(const Grid& s, const std::vector<std::vector<int>>& pos) {
    const int n = static_cast<int>(s.size());
    auto negatives = [&](int i) {
        std::vector<int> neg;
        for (int j = 0; j < n; ++j) {
            if (std::find(pos[i].begin(), pos[i].end(), j) == pos[i].end()) neg.push_back(j);
        }
        return neg;
    };
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto neg = negatives(i);
        for (int k : pos[static_cast<std::size_t>(i)]) {
            double den_row = std::exp(s[i][k]);
            double den_col = std::exp(s[k][i]);
            for (int j : neg) {
                den_row += std::exp(s[i][j]);
                den_col += std::exp(s[j][i]);
            }
            total += std::log(std::exp(s[i][k]) / den_row);
            total += std::log(std::exp(s[k][i]) / den_col);
        }
    }
    return -total / (2.0 * n);
}

// Combined pairwise score from raw (unnormalized) embedding grids.
inline double combined(const Grid& v_tok, const Grid& v_mid, const Grid& v_glob,
                       const Grid& t_tok, const Grid& t_mid, const Grid& t_glob, double alpha,
                       double beta) {
    const double tok = ti(l2norm_rows(t_tok), l2norm_rows(v_tok));
    const double mid = ti(l2norm_rows(t_mid), l2norm_rows(v_mid));
    const Grid tg = l2norm_rows(t_glob), vg = l2norm_rows(v_glob);
    double glob = 0.0;
    for (std::size_t d = 0; d < tg[0].size(); ++d) glob += tg[0][d] * vg[0][d];
    return tok + alpha * mid + beta * glob;
}

struct RankStats {
    double r1, r5, r10, mdr, mnr;
};

// Sort-based rank metrics: rank = position of the truth entry after a
// descending sort where the truth loses no tie (optimistic).
inline RankStats rank_metrics(const Grid& s, const std::vector<int>& truth) {
    std::vector<double> ranks;
    for (std::size_t q = 0; q < s.size(); ++q) {
        std::vector<double> row = s[q];
        const double target = row[static_cast<std::size_t>(truth[q])];
        std::sort(row.begin(), row.end(), std::greater<>());
        const auto it = std::find(row.begin(), row.end(), target); // first == target
        ranks.push_back(static_cast<double>(it - row.begin()) + 1.0);
    }
    std::vector<double> sorted = ranks;
    std::sort(sorted.begin(), sorted.end());
    RankStats st{};
    const double n = static_cast<double>(ranks.size());
    st.r1 = 100.0 * std::count_if(ranks.begin(), ranks.end(), [](double r) { return r <= 1; }) / n;
    st.r5 = 100.0 * std::count_if(ranks.begin(), ranks.end(), [](double r) { return r <= 5; }) / n;
    st.r10 =
        100.0 * std::count_if(ranks.begin(), ranks.end(), [](double r) { return r <= 10; }) / n;
    st.mdr = sorted[(sorted.size() - 1) / 2];
    st.mnr = 0.0;
    for (double r : ranks) st.mnr += r;
    st.mnr /= n;
    return st;
}

inline hcr::Mat random_mat(int rows, int cols, hcr::Rng& rng, double scale = 1.0) {
    hcr::Mat m(rows, cols);
    for (auto& x : m.v) x = scale * rng.normal();
    return m;
}

inline hcr::Mat random_unit_rows(int rows, int cols, hcr::Rng& rng) {
    hcr::Mat m = random_mat(rows, cols, rng);
    for (int i = 0; i < rows; ++i) {
        double n2 = 0.0;
        for (int c = 0; c < cols; ++c) n2 += m.at(i, c) * m.at(i, c);
        const double d = std::sqrt(n2);
        for (int c = 0; c < cols; ++c) m.at(i, c) /= d;
    }
    return m;
}

// Head computing tokens = x, mid slots = token mean, global = mid mean:
// proj = I, W = 0 (uniform weights), h1 = [I | -I], h2 = [I ; -I] so that
// h(x) = relu(x) - relu(-x) = x exactly. Pins aggregate semantics in tests.
inline hcr::ModalityHead identity_head(hcr::ParamSet& params, const std::string& prefix, int dim,
                                       int mid_slots) {
    auto eye = [dim](double sign) {
        hcr::Mat m(dim, dim);
        for (int i = 0; i < dim; ++i) m.at(i, i) = sign;
        return m;
    };
    auto h1 = [&]() { // dim x 2dim = [I | -I]
        hcr::Mat m(dim, 2 * dim);
        for (int i = 0; i < dim; ++i) {
            m.at(i, i) = 1.0;
            m.at(i, dim + i) = -1.0;
        }
        return m;
    };
    auto h2 = [&]() { // 2dim x dim = [I ; -I]
        hcr::Mat m(2 * dim, dim);
        for (int i = 0; i < dim; ++i) {
            m.at(i, i) = 1.0;
            m.at(dim + i, i) = -1.0;
        }
        return m;
    };
    hcr::ModalityHead head;
    head.proj = params.add(prefix + ".proj", eye(1.0));
    head.proj_b = params.add(prefix + ".proj_b", hcr::Mat(1, dim));
    head.agg_mid.W = params.add(prefix + ".agg_mid.W", hcr::Mat(dim, mid_slots));
    head.agg_mid.h1 = params.add(prefix + ".agg_mid.h1", h1());
    head.agg_mid.b1 = params.add(prefix + ".agg_mid.b1", hcr::Mat(1, 2 * dim));
    head.agg_mid.h2 = params.add(prefix + ".agg_mid.h2", h2());
    head.agg_mid.b2 = params.add(prefix + ".agg_mid.b2", hcr::Mat(1, dim));
    head.agg_global.W = params.add(prefix + ".agg_global.W", hcr::Mat(dim, 1));
    head.agg_global.h1 = params.add(prefix + ".agg_global.h1", h1());
    head.agg_global.b1 = params.add(prefix + ".agg_global.b1", hcr::Mat(1, 2 * dim));
    head.agg_global.h2 = params.add(prefix + ".agg_global.h2", h2());
    head.agg_global.b2 = params.add(prefix + ".agg_global.b2", hcr::Mat(1, dim));
    return head;
}

} // namespace oracle
