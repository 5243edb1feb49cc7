// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "hcr/interaction.hpp"
#include "oracles.hpp"

using namespace hcr;

namespace {

// Hierarchy whose levels are handed in directly (unit rows expected).
HierarchicalEmbedding embed_from(const Mat& tokens, const Mat& mid, const Mat& global) {
    HierarchicalEmbedding e;
    e.tokens = Tensor::from_mat(tokens);
    e.mid = Tensor::from_mat(mid);
    e.global = Tensor::from_mat(global);
    e.tokens_n = l2_normalize_rows(e.tokens);
    e.mid_n = l2_normalize_rows(e.mid);
    e.global_n = l2_normalize_rows(e.global);
    return e;
}

HierarchicalEmbedding random_embed(int n_tok, int n_mid, int dim, Rng& rng) {
    return embed_from(oracle::random_mat(n_tok, dim, rng), oracle::random_mat(n_mid, dim, rng),
                      oracle::random_mat(1, dim, rng));
}

} // namespace

TEST_CASE("token_interaction: hand-enumerated fixture") {
    const Tensor a = Tensor::from_values(2, 2, {1, 0, 0, 1});
    const Tensor b = Tensor::from_values(1, 2, {1, 0});
    CHECK(token_interaction(a, b).item() == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("token_interaction: self-similarity is one") {
    Rng rng(7);
    const Tensor a = Tensor::from_mat(oracle::random_unit_rows(5, 8, rng));
    CHECK(token_interaction(a, a).item() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("token_interaction: exact symmetry in its arguments") {
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const Tensor a = Tensor::from_mat(oracle::random_unit_rows(4, 6, rng));
        const Tensor b = Tensor::from_mat(oracle::random_unit_rows(3, 6, rng));
        CHECK(token_interaction(a, b).item() == token_interaction(b, a).item());
    }
}

TEST_CASE("token_interaction: permutation invariance and bounds") {
    Rng rng(13);
    const Mat a = oracle::random_unit_rows(5, 6, rng);
    const Mat b = oracle::random_unit_rows(4, 6, rng);
    const double base = token_interaction(Tensor::from_mat(a), Tensor::from_mat(b)).item();
    CHECK(std::abs(base) <= 1.0 + 1e-12);

    const Mat ap = gather_rows(a, {4, 2, 0, 3, 1});
    const Mat bp = gather_rows(b, {1, 3, 0, 2});
    const double perm = token_interaction(Tensor::from_mat(ap), Tensor::from_mat(bp)).item();
    CHECK(std::abs(base - perm) <= 1e-12);
}

TEST_CASE("token_interaction: raw rows rejected, empty rejected") {
    const Tensor raw = Tensor::from_values(1, 2, {3, 4});
    const Tensor unit = Tensor::from_values(1, 2, {1, 0});
    CHECK_THROWS_AS(token_interaction(raw, unit), ContractError);
    CHECK_THROWS_AS(token_interaction(Tensor{}, unit), ContractError);
}

TEST_CASE("global_similarity fixtures") {
    const Tensor e1 = Tensor::from_values(1, 2, {1, 0});
    const Tensor e2 = Tensor::from_values(1, 2, {0, 1});
    const Tensor v = Tensor::from_values(1, 2, {0.6, 0.8});
    CHECK(global_similarity(e1, e1).item() == 1.0);
    CHECK(global_similarity(e1, e2).item() == 0.0);
    CHECK(global_similarity(v, e1).item() == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("combined_score: identity case and degenerate weights") {
    Rng rng(17);
    const auto e = random_embed(4, 2, 6, rng);
    const double full = combined_score(e, e, GranularityWeights{0.5, 0.1}).item();
    CHECK(full == doctest::Approx(1.6).epsilon(1e-9));

    const auto v = random_embed(4, 2, 6, rng);
    const auto t = random_embed(3, 2, 6, rng);
    const double zero_w = combined_score(v, t, GranularityWeights{0.0, 0.0}).item();
    CHECK(zero_w == token_interaction(t.tokens_n, v.tokens_n).item());
}

TEST_CASE("combined_score: linear and monotone in beta") {
    Rng rng(19);
    Mat tg(1, 4), vg(1, 4);
    tg.at(0, 0) = 1.0;
    vg.at(0, 1) = 1.0; // orthogonal globals
    const auto v = embed_from(oracle::random_mat(3, 4, rng), oracle::random_mat(2, 4, rng), vg);
    Mat t_tok = oracle::random_mat(3, 4, rng), t_mid = oracle::random_mat(2, 4, rng);
    const auto t = embed_from(t_tok, t_mid, tg);

    const double s1 = combined_score(v, t, GranularityWeights{0.5, 0.0}).item();
    const double s2 = combined_score(v, t, GranularityWeights{0.5, 1.0}).item();
    const double s3 = combined_score(v, t, GranularityWeights{0.5, 2.0}).item();
    CHECK(s2 - s1 == doctest::Approx(s3 - s2).epsilon(1e-12)); // linear in beta
    CHECK(s1 == doctest::Approx(s2).epsilon(1e-12));           // orthogonal: slope 0

    // combined = token + alpha*mid + beta*global entrywise (monotone weights)
    const std::vector<HierarchicalEmbedding> vs = {v}, ts = {t};
    const GranularityWeights w{0.7, 0.3};
    const double tok = score_matrix(vs, ts, Granularity::token, w).values.item();
    const double mid = score_matrix(vs, ts, Granularity::mid, w).values.item();
    const double glob = score_matrix(vs, ts, Granularity::global, w).values.item();
    const double comb = score_matrix(vs, ts, Granularity::combined, w).values.item();
    CHECK(comb == doctest::Approx(tok + 0.7 * mid + 0.3 * glob).epsilon(1e-12));
}

TEST_CASE("score_matrix: identical pairs make a constant matrix") {
    Rng rng(23);
    const auto e = random_embed(3, 2, 5, rng);
    const std::vector<HierarchicalEmbedding> vs = {e, e}, ts = {e, e};
    const Tensor s = score_matrix(vs, ts, Granularity::combined, GranularityWeights{}).values;
    for (double v : s.values()) CHECK(v == doctest::Approx(s.at(0, 0)).epsilon(1e-14));
}

TEST_CASE("score_matrix: global granularity is the plain cosine matrix") {
    Rng rng(29);
    std::vector<HierarchicalEmbedding> vs, ts;
    for (int i = 0; i < 3; ++i) vs.push_back(random_embed(2, 2, 4, rng));
    for (int i = 0; i < 2; ++i) ts.push_back(random_embed(2, 2, 4, rng));
    const Tensor s = score_matrix(vs, ts, Granularity::global, GranularityWeights{}).values;
    CHECK(s.rows() == 2); // rectangular: rows = texts
    CHECK(s.cols() == 3);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double cos =
                global_similarity(ts[static_cast<std::size_t>(i)].global_n,
                                  vs[static_cast<std::size_t>(j)].global_n)
                    .item();
            CHECK(s.at(i, j) == doctest::Approx(cos).epsilon(1e-14));
        }
    }
}

TEST_CASE("score_matrix: batched entries match per-pair recomputation") {
    Rng rng(31);
    std::vector<HierarchicalEmbedding> vs, ts;
    for (int i = 0; i < 3; ++i) {
        vs.push_back(random_embed(4, 2, 6, rng));
        ts.push_back(random_embed(3, 2, 6, rng));
    }
    const GranularityWeights w{0.5, 0.1};
    const Tensor s = score_matrix(vs, ts, Granularity::combined, w).values;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double one = combined_score(vs[static_cast<std::size_t>(j)],
                                              ts[static_cast<std::size_t>(i)], w)
                                   .item();
            CHECK(std::abs(s.at(i, j) - one) <= 1e-12);
        }
    }
    CHECK_THROWS_AS(score_matrix({}, ts, Granularity::token, w), ContractError);
}

TEST_CASE("token_interaction matches the loop oracle") {
    Rng rng(37);
    for (int trial = 0; trial < 20; ++trial) {
        const Mat a = oracle::random_unit_rows(2 + trial % 4, 5, rng);
        const Mat b = oracle::random_unit_rows(1 + trial % 3, 5, rng);
        const double got = token_interaction(Tensor::from_mat(a), Tensor::from_mat(b)).item();
        CHECK(std::abs(got - oracle::ti(oracle::from_mat(a), oracle::from_mat(b))) <= 1e-10);
    }
}
