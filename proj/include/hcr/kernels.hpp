// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace hcr::kernels {

// Function table for the double-precision primitives underneath tensor ops.
// There is one scalar reference implementation and SIMD variants (AVX2 on
// x86-64, NEON on aarch64) selected at runtime. SIMD variants may reassociate
// sums (and use FMA), so cross-backend comparisons are tolerance-based; a
// fixed backend is bit-deterministic run to run.
struct Ops {
    const char* name;

    double (*dot)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    void (*vadd)(const double* a, const double* b, double* out, std::size_t n);
    void (*vsub)(const double* a, const double* b, double* out, std::size_t n);
    void (*vmul)(const double* a, const double* b, double* out, std::size_t n);
    void (*vscale)(const double* a, double s, double* out, std::size_t n);
    double (*sum)(const double* a, std::size_t n);
    // Index of the maximum element; ties resolve to the lowest index.
    std::size_t (*argmax)(const double* a, std::size_t n);
    // c = a * b, row-major, c fully overwritten. a is m x k, b is k x n.
    void (*matmul)(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n);
};

// Reference kernels; always available and the baseline for equivalence tests.
const Ops& scalar();

// Currently selected backend. Defaults to the best supported one; the
// HCR_KERNELS environment variable ("scalar", "avx2", "neon") overrides.
const Ops& active();
std::string active_name();

// Explicit selection; returns false (and leaves the selection unchanged)
// when the named backend is unsupported on this machine.
bool select(const std::string& name);

// Backends usable on this machine, reference first.
std::vector<std::string> available();

} // namespace hcr::kernels
