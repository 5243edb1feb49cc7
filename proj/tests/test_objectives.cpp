// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "hcr/objectives.hpp"
#include "oracles.hpp"

using namespace hcr;

namespace {

HierarchicalEmbedding random_embed(int n_tok, int n_mid, int dim, Rng& rng) {
    HierarchicalEmbedding e;
    e.tokens = Tensor::from_mat(oracle::random_mat(n_tok, dim, rng));
    e.mid = Tensor::from_mat(oracle::random_mat(n_mid, dim, rng));
    e.global = Tensor::from_mat(oracle::random_mat(1, dim, rng));
    e.tokens_n = l2_normalize_rows(e.tokens);
    e.mid_n = l2_normalize_rows(e.mid);
    e.global_n = l2_normalize_rows(e.global);
    return e;
}

std::vector<HierarchicalEmbedding> random_batch(int n, int n_tok, int n_mid, int dim, Rng& rng) {
    std::vector<HierarchicalEmbedding> out;
    for (int i = 0; i < n; ++i) out.push_back(random_embed(n_tok, n_mid, dim, rng));
    return out;
}

} // namespace

TEST_CASE("BatchLabels: invariants and validation") {
    const auto id = BatchLabels::identity(3);
    CHECK(id.positives(1) == std::vector<int>{1});
    CHECK(id.negatives(1) == std::vector<int>{0, 2});

    const auto lab = BatchLabels::from_positive_sets(4, {{2}, {}, {0}, {}});
    CHECK(lab.positives(0) == std::vector<int>{0, 2}); // self inserted, sorted
    CHECK(lab.positives(1) == std::vector<int>{1});
    CHECK(lab.negatives(0) == std::vector<int>{1, 3});

    CHECK_THROWS_AS(BatchLabels::from_positive_sets(2, {{0}, {7}}), ContractError);
    CHECK_THROWS_AS(BatchLabels::from_positive_sets(2, {{0}}), ContractError);
}

TEST_CASE("infonce: 2x2 identity matrix fixture") {
    const Tensor s = Tensor::from_values(2, 2, {1, 0, 0, 1});
    const double expect = std::log(1.0 + std::exp(-1.0)); // 0.313262...
    CHECK(infonce_positive_set(s, BatchLabels::identity(2)).item() ==
          doctest::Approx(expect).epsilon(1e-9));
    CHECK(expect == doctest::Approx(0.313262).epsilon(1e-5));
}

TEST_CASE("infonce: constant matrix gives log N regardless of the constant") {
    for (double c : {0.0, -3.7, 42.0}) {
        const Tensor s = Tensor::full(2, 2, c);
        CHECK(infonce_positive_set(s, BatchLabels::identity(2)).item() ==
              doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }
}

TEST_CASE("infonce: all-positive batch collapses to zero loss") {
    Rng rng(3);
    const Tensor s = Tensor::from_mat(oracle::random_mat(2, 2, rng));
    const auto lab = BatchLabels::from_positive_sets(2, {{0, 1}, {0, 1}});
    CHECK(infonce_positive_set(s, lab).item() == 0.0);
}

TEST_CASE("infonce: matches the naive oracle with and without extra positives") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + trial % 3;
        const Mat s = oracle::random_mat(n, n, rng);
        std::vector<std::vector<int>> pos(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) pos[static_cast<std::size_t>(i)] = {i};
        if (trial % 2 == 1) pos[0].push_back(1 % n); // non-trivial set on odd trials
        const auto lab = BatchLabels::from_positive_sets(n, pos);
        const double got = infonce_positive_set(Tensor::from_mat(s), lab).item();
        std::vector<std::vector<int>> opos(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) opos[static_cast<std::size_t>(i)] = lab.positives(i);
        CHECK(std::abs(got - oracle::infonce(oracle::from_mat(s), opos)) <= 1e-10);
    }
}

TEST_CASE("infonce: invariant to a global shift of the score matrix") {
    Rng rng(7);
    const Mat s = oracle::random_mat(4, 4, rng);
    Mat shifted = s;
    for (auto& v : shifted.v) v += 11.3;
    const auto lab = BatchLabels::from_positive_sets(4, {{0, 2}, {1}, {2}, {3}});
    const double a = infonce_positive_set(Tensor::from_mat(s), lab).item();
    const double b = infonce_positive_set(Tensor::from_mat(shifted), lab).item();
    CHECK(std::abs(a - b) <= 1e-9);
}

TEST_CASE("infonce: nonnegative for standard labels") {
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const Tensor s = Tensor::from_mat(oracle::random_mat(5, 5, rng, 2.0));
        CHECK(infonce_positive_set(s, BatchLabels::identity(5)).item() >= 0.0);
    }
}

TEST_CASE("loss_hci: degenerate weights reduce to the token-only baseline") {
    Rng rng(13);
    const auto vs = random_batch(3, 4, 2, 6, rng);
    const auto ts = random_batch(3, 3, 2, 6, rng);
    const auto lab = BatchLabels::identity(3);
    const double hci = loss_hci(vs, ts, lab, LossWeights{0.0, 0.0, 0.1, 0.1}).item();
    const double twi = baseline_twi(vs, ts, lab).item();
    CHECK(hci == doctest::Approx(twi).epsilon(1e-15));
}

TEST_CASE("loss_hci: matches full brute-force recomputation") {
    Rng rng(17);
    const auto vs = random_batch(3, 3, 2, 4, rng);
    const auto ts = random_batch(3, 3, 2, 4, rng);
    const auto lab = BatchLabels::identity(3);
    const LossWeights w;
    const double got = loss_hci(vs, ts, lab, w).item();

    auto grid_of = [&](Granularity g) {
        oracle::Grid s(3, std::vector<double>(3));
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const auto& v = vs[static_cast<std::size_t>(j)];
                const auto& t = ts[static_cast<std::size_t>(i)];
                if (g == Granularity::token) {
                    s[i][j] = oracle::ti(oracle::from_tensor(t.tokens_n),
                                         oracle::from_tensor(v.tokens_n));
                } else if (g == Granularity::mid) {
                    s[i][j] =
                        oracle::ti(oracle::from_tensor(t.mid_n), oracle::from_tensor(v.mid_n));
                } else {
                    double acc = 0.0;
                    for (int d = 0; d < 4; ++d) acc += t.global_n.at(0, d) * v.global_n.at(0, d);
                    s[i][j] = acc;
                }
            }
        }
        return s;
    };
    std::vector<std::vector<int>> pos = {{0}, {1}, {2}};
    const double expect = oracle::infonce(grid_of(Granularity::token), pos) +
                          w.alpha * oracle::infonce(grid_of(Granularity::mid), pos) +
                          w.beta * oracle::infonce(grid_of(Granularity::global), pos);
    CHECK(std::abs(got - expect) <= 1e-10);
}

TEST_CASE("select_hardest: fixtures, ties, oracle, shift invariance") {
    // diagonal-dominant with one planted off-diagonal spike
    Mat s(3, 3);
    for (int i = 0; i < 3; ++i) s.at(i, i) = 5.0;
    s.at(0, 2) = 4.0;
    const auto lab = BatchLabels::identity(3);
    auto h = select_hardest(s, lab);
    CHECK(h.video_for_text[0] == 2);

    // all negatives equal: first negative wins
    Mat flat(3, 3, 1.0);
    h = select_hardest(flat, lab);
    CHECK(h.video_for_text == std::vector<int>{1, 0, 0});
    CHECK(h.text_for_video == std::vector<int>{1, 0, 0});

    Rng rng(19);
    for (int trial = 0; trial < 10; ++trial) {
        const Mat r = oracle::random_mat(4, 4, rng);
        const auto lab4 = BatchLabels::identity(4);
        const auto got = select_hardest(r, lab4);
        for (int i = 0; i < 4; ++i) {
            int best = -1;
            for (int j = 0; j < 4; ++j) {
                if (j == i) continue;
                if (best < 0 || r.at(i, j) > r.at(i, best)) best = j;
            }
            CHECK(got.video_for_text[static_cast<std::size_t>(i)] == best);
        }
        Mat shifted = r;
        for (auto& v : shifted.v) v += 3.25;
        const auto got2 = select_hardest(shifted, lab4);
        CHECK(got.video_for_text == got2.video_for_text);
        CHECK(got.text_for_video == got2.text_for_video);
    }

    // no negatives -> sentinel
    const auto all_pos = BatchLabels::from_positive_sets(2, {{0, 1}, {0, 1}});
    h = select_hardest(Mat(2, 2, 1.0), all_pos);
    CHECK(h.video_for_text == std::vector<int>{-1, -1});
}

TEST_CASE("loss_hsm: margin arithmetic fixtures") {
    // pos sim 0.9; hardest text-side 0.5 (inactive), video-side 0.85 -> 0.025
    Mat s(2, 2);
    s.at(0, 0) = 0.9;
    s.at(1, 1) = 0.9;
    s.at(1, 0) = 0.5;
    s.at(0, 1) = 0.85;
    HardestIndices h;
    h.video_for_text = {1, 0};
    h.text_for_video = {1, 0};
    CHECK(loss_hsm(Tensor::from_mat(s), h, 0.1).item() == doctest::Approx(0.025).epsilon(1e-12));

    // all negatives below pos - theta: zero
    Mat easy(2, 2);
    easy.at(0, 0) = easy.at(1, 1) = 0.9;
    easy.at(0, 1) = easy.at(1, 0) = 0.1;
    CHECK(loss_hsm(Tensor::from_mat(easy), h, 0.1).item() == 0.0);

    // negative equals positive: theta per item
    Mat tie(2, 2, 0.7);
    CHECK(loss_hsm(Tensor::from_mat(tie), h, 0.1).item() == doctest::Approx(0.1).epsilon(1e-12));

    CHECK_THROWS_AS(loss_hsm(Tensor::from_mat(s), h, -0.5), ConfigError);

    // sentinel entries contribute zero
    HardestIndices none;
    none.video_for_text = {-1, -1};
    none.text_for_video = {-1, -1};
    CHECK(loss_hsm(Tensor::from_mat(tie), none, 0.1).item() == 0.0);
}

TEST_CASE("loss_hsm is nonnegative") {
    Rng rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        const Mat s = oracle::random_mat(4, 4, rng);
        const auto lab = BatchLabels::identity(4);
        const auto h = select_hardest(s, lab);
        CHECK(loss_hsm(Tensor::from_mat(s), h, 0.1).item() >= 0.0);
    }
}

TEST_CASE("baselines: gdp and twi equal the matching single-granularity loss") {
    Rng rng(29);
    const auto vs = random_batch(3, 3, 2, 5, rng);
    const auto ts = random_batch(3, 4, 2, 5, rng);
    const auto lab = BatchLabels::identity(3);

    const Tensor glob = score_matrix(vs, ts, Granularity::global, GranularityWeights{}).values;
    CHECK(baseline_gdp(vs, ts, lab).item() == infonce_positive_set(glob, lab).item());

    const Tensor tok = score_matrix(vs, ts, Granularity::token, GranularityWeights{}).values;
    CHECK(baseline_twi(vs, ts, lab).item() == infonce_positive_set(tok, lab).item());

    // twi inherits TI's permutation invariance over frames
    auto shuffled = vs;
    for (auto& e : shuffled) {
        Mat t = e.tokens.mat();
        std::vector<int> perm(static_cast<std::size_t>(t.rows));
        for (int i = 0; i < t.rows; ++i) perm[static_cast<std::size_t>(i)] = t.rows - 1 - i;
        e.tokens = Tensor::from_mat(gather_rows(t, perm));
        e.tokens_n = l2_normalize_rows(e.tokens);
    }
    CHECK(std::abs(baseline_twi(shuffled, ts, lab).item() - baseline_twi(vs, ts, lab).item()) <=
          1e-12);
}

TEST_CASE("baseline_gdp: hand-made identity-similarity batch") {
    // globals are orthogonal unit vectors: cosine matrix is the 2x2 identity
    Mat g0(1, 4), g1(1, 4);
    g0.at(0, 0) = 1.0;
    g1.at(0, 1) = 1.0;
    Rng rng(31);
    auto mk = [&](const Mat& g) {
        HierarchicalEmbedding e;
        e.tokens = Tensor::from_mat(oracle::random_mat(2, 4, rng));
        e.mid = Tensor::from_mat(oracle::random_mat(2, 4, rng));
        e.global = Tensor::from_mat(g);
        e.tokens_n = l2_normalize_rows(e.tokens);
        e.mid_n = l2_normalize_rows(e.mid);
        e.global_n = l2_normalize_rows(e.global);
        return e;
    };
    const std::vector<HierarchicalEmbedding> vs = {mk(g0), mk(g1)};
    const std::vector<HierarchicalEmbedding> ts = {mk(g0), mk(g1)};
    CHECK(baseline_gdp(vs, ts, BatchLabels::identity(2)).item() ==
          doctest::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-9));
}

TEST_CASE("total_loss: toggle isolation and hard-sample weighting") {
    Rng rng(37);
    const auto vs = random_batch(3, 3, 2, 5, rng);
    const auto ts = random_batch(3, 3, 2, 5, rng);
    const auto lab = BatchLabels::identity(3);
    const LossWeights w;

    const auto no_hsm = total_loss(vs, ts, lab, w, LossVariant::hci, false);
    CHECK(!no_hsm.hsm.defined());
    CHECK(no_hsm.total.item() == loss_hci(vs, ts, lab, w).item());

    const auto with_hsm = total_loss(vs, ts, lab, w, LossVariant::hci, true);
    CHECK(with_hsm.total.item() ==
          doctest::Approx(with_hsm.contrastive.item() + w.lambda * with_hsm.hsm.item())
              .epsilon(1e-15));

    const auto gdp = total_loss(vs, ts, lab, w, LossVariant::gdp, false);
    CHECK(gdp.total.item() == baseline_gdp(vs, ts, lab).item());

    CHECK_THROWS_AS(total_loss(std::span<const HierarchicalEmbedding>(vs.data(), 1),
                               std::span<const HierarchicalEmbedding>(ts.data(), 1),
                               BatchLabels::identity(1), w, LossVariant::hci, false),
                    ContractError);
}

TEST_CASE("global-only loss still reaches mid and token aggregation parameters") {
    ParamSet params;
    Rng rng(41);
    const ModalityHead video = make_head(params, "video", 4, 4, 2, 4, false, rng);
    const ModalityHead text = make_head(params, "text", 4, 4, 2, 3, false, rng);
    Rng drng(43);
    std::vector<HierarchicalEmbedding> ve, te;
    for (int i = 0; i < 3; ++i) {
        ve.push_back(encode_hierarchy(Tensor::from_mat(oracle::random_mat(4, 4, drng, 4.0)), video));
        te.push_back(encode_hierarchy(Tensor::from_mat(oracle::random_mat(3, 4, drng, 4.0)), text));
    }
    const auto g = grad(baseline_gdp(ve, te, BatchLabels::identity(3)), params);
    for (const char* name : {"video.agg_mid.W", "video.proj", "text.agg_mid.h1"}) {
        double mx = 0.0;
        for (double v : g.at(name).v) mx = std::max(mx, std::abs(v));
        CAPTURE(name);
        CHECK(mx > 0.0);
    }
}

TEST_CASE("total_loss gradient passes a finite-difference spot check") {
    ParamSet params;
    Rng rng(47);
    const ModalityHead video = make_head(params, "video", 4, 4, 2, 4, false, rng);
    const ModalityHead text = make_head(params, "text", 4, 4, 2, 3, false, rng);
    Rng drng(53);
    std::vector<Mat> vfeat, tfeat;
    for (int i = 0; i < 3; ++i) {
        vfeat.push_back(oracle::random_mat(4, 4, drng, 8.0));
        tfeat.push_back(oracle::random_mat(3, 4, drng, 8.0));
    }
    auto loss_fn = [&](std::uint64_t) {
        std::vector<HierarchicalEmbedding> ve, te;
        for (int i = 0; i < 3; ++i) {
            ve.push_back(encode_hierarchy(Tensor::from_mat(vfeat[static_cast<std::size_t>(i)]), video));
            te.push_back(encode_hierarchy(Tensor::from_mat(tfeat[static_cast<std::size_t>(i)]), text));
        }
        return total_loss(ve, te, BatchLabels::identity(3), LossWeights{}, LossVariant::hci, true)
            .total;
    };
    CHECK(finite_diff_check(loss_fn, params, 1e-5, 0) <= 1e-4);
}
