// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "hcr/errors.hpp"

namespace hcr {

// Plain row-major double matrix. Used wherever no gradient is needed
// (feature files, labels, evaluation); the autodiff Tensor wraps the same
// layout.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0)
        : rows(r), cols(c), v(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {
        if (r < 0 || c < 0) throw ShapeError("Mat: negative extent");
    }
    Mat(int r, int c, std::vector<double> data) : rows(r), cols(c), v(std::move(data)) {
        if (v.size() != static_cast<std::size_t>(r) * static_cast<std::size_t>(c)) {
            throw ShapeError("Mat: data size does not match extents");
        }
    }

    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
    const double* row(int r) const { return v.data() + static_cast<std::size_t>(r) * cols; }
    double* row(int r) { return v.data() + static_cast<std::size_t>(r) * cols; }
    std::size_t size() const { return v.size(); }
};

inline Mat transposed(const Mat& m) {
    Mat out(m.cols, m.rows);
    for (int i = 0; i < m.rows; ++i) {
        for (int j = 0; j < m.cols; ++j) out.at(j, i) = m.at(i, j);
    }
    return out;
}

inline Mat gather_rows(const Mat& m, const std::vector<int>& rows) {
    Mat out(static_cast<int>(rows.size()), m.cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const int r = rows[i];
        if (r < 0 || r >= m.rows) throw ShapeError("gather_rows: index out of range");
        for (int c = 0; c < m.cols; ++c) out.at(static_cast<int>(i), c) = m.at(r, c);
    }
    return out;
}

} // namespace hcr
