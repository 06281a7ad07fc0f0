#include "threads.hpp"

#include <algorithm>
#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rblab {

namespace {
std::atomic<int> g_thread_limit{0};
}

void set_thread_limit(int threads) { g_thread_limit.store(threads < 0 ? 0 : threads); }

int thread_limit() { return g_thread_limit.load(); }

namespace detail {

void run_blocks(std::int64_t total, std::int64_t block,
                void (*fn)(void*, std::int64_t, std::int64_t), void* ctx) {
    if (total <= 0) return;
    block = std::max<std::int64_t>(1, block);
    const std::int64_t n_blocks = (total + block - 1) / block;

#ifdef _OPENMP
    int want = g_thread_limit.load();
    if (want == 0) want = omp_get_max_threads();
    want = static_cast<int>(std::min<std::int64_t>(want, n_blocks));
    if (want > 1 && !omp_in_parallel()) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(want)
        for (std::int64_t b = 0; b < n_blocks; ++b)
            fn(ctx, b * block, std::min(total, (b + 1) * block));
        return;
    }
#endif
    for (std::int64_t b = 0; b < n_blocks; ++b)
        fn(ctx, b * block, std::min(total, (b + 1) * block));
}

} // namespace detail
} // namespace rblab
