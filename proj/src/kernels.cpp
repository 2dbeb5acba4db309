#include "scs/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace scs::kernels {

#if defined(SCS_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

const KernelTable* avx2() {
#if defined(SCS_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? &avx2_table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() {
    static const KernelTable* chosen = [] {
        const char* forced = std::getenv("SCS_KERNELS");
        if (forced && std::strcmp(forced, "scalar") == 0) return &scalar();
        if (const KernelTable* fast = avx2()) return fast;
        return &scalar();
    }();
    return *chosen;
}

}  // namespace scs::kernels
