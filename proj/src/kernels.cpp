// SPDX-License-Identifier: Apache-2.0
//
// Runtime backend selection. Detection happens once; tests may switch
// backends explicitly via select().

#include "hcr/kernels.hpp"

#include <cstdlib>

namespace hcr::kernels {

const Ops* avx2_ops(); // kernels_avx2.cpp; nullptr off x86-64
const Ops* neon_ops(); // kernels_neon.cpp; nullptr off aarch64

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Ops* detect(const std::string& name) {
    if (name == "scalar") return &scalar();
    if (name == "avx2" && cpu_has_avx2()) return avx2_ops();
    if (name == "neon") return neon_ops(); // non-null only on aarch64
    return nullptr;
}

const Ops* default_backend() {
    if (const char* env = std::getenv("HCR_KERNELS")) {
        if (const Ops* ops = detect(env)) return ops;
    }
    if (const Ops* ops = detect("avx2")) return ops;
    if (const Ops* ops = detect("neon")) return ops;
    return &scalar();
}

const Ops*& active_slot() {
    static const Ops* current = default_backend();
    return current;
}

} // namespace

const Ops& active() { return *active_slot(); }

std::string active_name() { return active().name; }

bool select(const std::string& name) {
    if (const Ops* ops = detect(name)) {
        active_slot() = ops;
        return true;
    }
    return false;
}

std::vector<std::string> available() {
    std::vector<std::string> out{"scalar"};
    if (detect("avx2")) out.emplace_back("avx2");
    if (detect("neon")) out.emplace_back("neon");
    return out;
}

} // namespace hcr::kernels
