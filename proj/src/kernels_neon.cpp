// SPDX-License-Identifier: Apache-2.0
//
// NEON kernels for aarch64 (float64x2, baseline on that architecture).

#include "hcr/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace hcr::kernels {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
    }
    double out = vaddvq_f64(acc);
    for (; i < n; ++i) out += a[i] * b[i];
    return out;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void vadd_neon(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void vsub_neon(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void vmul_neon(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void vscale_neon(const double* a, double s, double* out, std::size_t n) {
    const float64x2_t vs = vdupq_n_f64(s);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vs));
    for (; i < n; ++i) out[i] = a[i] * s;
}

double sum_neon(const double* a, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(a + i));
    double out = vaddvq_f64(acc);
    for (; i < n; ++i) out += a[i];
    return out;
}

std::size_t argmax_neon(const double* a, std::size_t n) {
    if (n < 4) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < n; ++i) {
            if (a[i] > a[best]) best = i;
        }
        return best;
    }
    float64x2_t vmax = vld1q_f64(a);
    std::size_t i = 2;
    for (; i + 2 <= n; i += 2) vmax = vmaxq_f64(vmax, vld1q_f64(a + i));
    double m = vmaxvq_f64(vmax);
    for (; i < n; ++i) m = a[i] > m ? a[i] : m;
    for (std::size_t j = 0; j < n; ++j) {
        if (a[j] == m) return j;
    }
    return 0; // unreachable for finite input
}

void matmul_neon(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const float64x2_t aik = vdupq_n_f64(a[i * k + kk]);
            const double* brow = b + kk * n;
            std::size_t j = 0;
            for (; j + 2 <= n; j += 2) {
                vst1q_f64(crow + j, vfmaq_f64(vld1q_f64(crow + j), aik, vld1q_f64(brow + j)));
            }
            const double s = a[i * k + kk];
            for (; j < n; ++j) crow[j] += s * brow[j];
        }
    }
}

} // namespace

const Ops* neon_ops() {
    static const Ops ops = {
        "neon",     dot_neon, axpy_neon,   vadd_neon, vsub_neon,
        vmul_neon,  vscale_neon, sum_neon, argmax_neon, matmul_neon,
    };
    return &ops;
}

} // namespace hcr::kernels

#else

namespace hcr::kernels {
const Ops* neon_ops() { return nullptr; }
} // namespace hcr::kernels

#endif
