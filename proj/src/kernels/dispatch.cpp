#include <cstdlib>
#include <cstring>

#include "dbmm/kernels/kernels.hpp"

namespace dbmm::kernels {
namespace {

const Ops* detect() {
    const char* forced = std::getenv("DBMM_KERNEL_BACKEND");
    if (forced != nullptr) {
        if (std::strcmp(forced, "scalar") == 0) return &scalar_ops();
        if (std::strcmp(forced, "avx2") == 0) {
            const Ops* o = avx2_ops_or_null();
#if defined(__x86_64__) || defined(_M_X64)
            if (o != nullptr && __builtin_cpu_supports("avx2") &&
                __builtin_cpu_supports("fma")) {
                return o;
            }
#endif
            return &scalar_ops(); // requested but unavailable
        }
        if (std::strcmp(forced, "neon") == 0) {
            const Ops* o = neon_ops_or_null();
            if (o != nullptr) return o;
            return &scalar_ops();
        }
        return &scalar_ops(); // unknown name: be conservative
    }
#if defined(__x86_64__) || defined(_M_X64)
    if (avx2_ops_or_null() != nullptr && __builtin_cpu_supports("avx2") &&
        __builtin_cpu_supports("fma")) {
        return avx2_ops_or_null();
    }
#endif
    if (neon_ops_or_null() != nullptr) return neon_ops_or_null();
    return &scalar_ops();
}

} // namespace

const Ops& ops() {
    // Resolved once; thread-safe since C++11 static init rules.
    static const Ops* active = detect();
    return *active;
}

const char* backend_name() { return ops().name; }

} // namespace dbmm::kernels
