// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hcr {

// Self-contained gradient verification: builds a micro model (D = 4,
// 2 mid slots, positional on) and a 3-pair micro-batch per seed, then runs
// central finite differences against the analytic gradients of every loss.
//
// The micro-batch is redrawn (deterministically) if any ReLU pre-activation,
// hinge argument, or hardest-negative selection gap sits within nudging
// distance of a kink; the triplet margin itself is nudged by 1e-3 steps when
// a hinge argument lands on the kink.

struct GradcheckRow {
    std::string loss;
    std::uint64_t seed = 0;
    double max_rel_err = 0.0;
    std::string worst_param;
};

struct GradcheckReport {
    std::vector<GradcheckRow> rows;
    std::vector<std::string> param_groups; // every trainable parameter, by name
    double tolerance = 1e-4;

    bool pass() const {
        for (const auto& r : rows) {
            if (!(r.max_rel_err <= tolerance)) return false;
        }
        return true;
    }
};

// corrupt_fixture injects a deliberate analytic-only gradient term into each
// loss (forward values untouched); the negative control for the harness.
GradcheckReport run_gradcheck(int n_seeds = 3, double step = 1e-5, double tolerance = 1e-4,
                              bool corrupt_fixture = false);

std::string gradcheck_table(const GradcheckReport& report);

} // namespace hcr
