#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace relight {

// Global worker cap for block-parallel loops (CLI --threads).
int thread_count();
void set_thread_count(int n);

// Runs fn(block_index) for block_index in [0, block_count). Blocks are
// claimed from a shared counter, so the assignment of blocks to threads
// is nondeterministic -- callers must write results into per-block slots
// and combine them in block order to stay reproducible at any thread
// count.
void parallel_blocks(std::size_t block_count, const std::function<void(std::size_t)>& fn);

// Partitions [0, count) into fixed-size blocks and runs
// fn(begin, end, block_index) for each. Block boundaries depend only on
// count and block_size, never on the thread count.
void parallel_ranges(std::size_t count, std::size_t block_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

inline std::size_t block_count_for(std::size_t count, std::size_t block_size) {
    return (count + block_size - 1) / block_size;
}

}  // namespace relight
