// SPDX-License-Identifier: Apache-2.0

#include "hcr/denoiser.hpp"

#include <cmath>

#include "hcr/kernels.hpp"

namespace hcr {

ViewPlanEntry sample_views(int n_frames, Rng& rng) {
    if (n_frames < 1) throw ContractError("sample_views: need at least one frame");
    const int k = (n_frames + 1) / 2;
    ViewPlanEntry e;
    e.view1 = rng.sample_without_replacement(n_frames, k);
    e.view2 = rng.sample_without_replacement(n_frames, k);
    return e;
}

namespace {

void require_unit_rows(const Mat& m, const char* which) {
    for (int i = 0; i < m.rows; ++i) {
        const double nrm =
            std::sqrt(kernels::active().dot(m.row(i), m.row(i), static_cast<std::size_t>(m.cols)));
        if (std::abs(nrm - 1.0) > 1e-6) {
            throw ContractError(std::string("build_positive_sets: ") + which + " row " +
                                std::to_string(i) + " has norm " + std::to_string(nrm));
        }
    }
}

} // namespace

BatchLabels build_positive_sets(const Mat& view1_globals, const Mat& view2_globals,
                                bool symmetric) {
    if (view1_globals.rows != view2_globals.rows || view1_globals.cols != view2_globals.cols) {
        throw ShapeError("build_positive_sets: view matrices differ in shape");
    }
    require_unit_rows(view1_globals, "view1");
    require_unit_rows(view2_globals, "view2");
    const int n = view1_globals.rows;
    const std::size_t d = static_cast<std::size_t>(view1_globals.cols);

    std::vector<std::vector<int>> pos(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double self_agreement =
            kernels::active().dot(view1_globals.row(i), view2_globals.row(i), d);
        pos[static_cast<std::size_t>(i)].push_back(i);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double cross =
                kernels::active().dot(view1_globals.row(i), view1_globals.row(j), d);
            if (cross >= self_agreement) pos[static_cast<std::size_t>(i)].push_back(j);
        }
    }
    if (symmetric) {
        const auto directional = pos; // mirror pairs, no transitive closure
        for (int i = 0; i < n; ++i) {
            for (int j : directional[static_cast<std::size_t>(i)]) {
                if (j != i) pos[static_cast<std::size_t>(j)].push_back(i);
            }
        }
    }
    return BatchLabels::from_positive_sets(n, std::move(pos));
}

} // namespace hcr
