#include "relight/parallel.hpp"

#include <algorithm>

namespace relight {

namespace {
int g_thread_count = []() {
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}();
}  // namespace

int thread_count() { return g_thread_count; }

void set_thread_count(int n) { g_thread_count = std::max(1, n); }

void parallel_blocks(std::size_t block_count, const std::function<void(std::size_t)>& fn) {
    if (block_count == 0) return;
    std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(g_thread_count), block_count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < block_count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= block_count) break;
            fn(i);
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(workers - 1);
    for (std::size_t t = 1; t < workers; ++t) threads.emplace_back(worker);
    worker();
    for (auto& th : threads) th.join();
}

void parallel_ranges(std::size_t count, std::size_t block_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (count == 0) return;
    std::size_t blocks = block_count_for(count, block_size);
    parallel_blocks(blocks, [&](std::size_t b) {
        std::size_t begin = b * block_size;
        std::size_t end = std::min(count, begin + block_size);
        fn(begin, end, b);
    });
}

}  // namespace relight
