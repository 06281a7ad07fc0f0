#pragma once

#include <cstdint>

namespace rblab {

// Worker cap for internal parallel loops.  0 = hardware default.  Thread
// count never changes numeric results: work is split into fixed-size blocks
// and every output slot is written by exactly one block.
void set_thread_limit(int threads);
int thread_limit();

namespace detail {
void run_blocks(std::int64_t total, std::int64_t block,
                void (*fn)(void*, std::int64_t, std::int64_t), void* ctx);
}

template <typename F>
void parallel_for_blocks(std::int64_t total, std::int64_t block, F&& fn) {
    auto thunk = [](void* ctx, std::int64_t lo, std::int64_t hi) {
        (*static_cast<F*>(ctx))(lo, hi);
    };
    detail::run_blocks(total, block, thunk, &fn);
}

} // namespace rblab
