// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "hcr/mat.hpp"
#include "hcr/objectives.hpp"
#include "hcr/rng.hpp"

namespace hcr {

// Two independent frame subsets of one item, each of size ceil(n/2), drawn
// without replacement (the two lists may overlap each other). Sorted so a
// view preserves temporal order.
struct ViewPlanEntry {
    std::vector<int> view1, view2;
};

ViewPlanEntry sample_views(int n_frames, Rng& rng);

// Label discovery from two-view agreement. Rows of view1_globals /
// view2_globals are the unit video-level embeddings of each item's views
// (detached: labels are data, not a gradient path). Item j joins pos_i when
//   <v_i^1, v_j^1>  >=  <v_i^1, v_i^2>,
// a directional relation; `symmetric` additionally closes it both ways.
BatchLabels build_positive_sets(const Mat& view1_globals, const Mat& view2_globals,
                                bool symmetric = false);

} // namespace hcr
