#pragma once

#include <cstdint>
#include <functional>

namespace roughsde {

// 0 -> hardware concurrency, otherwise the requested count (>= 1).
int resolve_thread_count(int requested);

// Splits [0, total) into fixed blocks of block_size paths and hands
// (block_index, first, last) to the worker body. Blocks are claimed
// dynamically, so any per-block results must be written into slots indexed
// by block_index; merging those slots in index order makes every reduction
// independent of the thread count and schedule.
void run_path_blocks(std::int64_t total, std::int64_t block_size, int threads,
                     const std::function<void(int, std::int64_t, std::int64_t)>& body);

int block_count(std::int64_t total, std::int64_t block_size);

// Streaming mean/variance accumulator with an order-fixed merge.
struct MeanAccumulator {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::int64_t count = 0;

    void add(double x) {
        sum += x;
        sum_sq += x * x;
        ++count;
    }
    void merge(const MeanAccumulator& other) {
        sum += other.sum;
        sum_sq += other.sum_sq;
        count += other.count;
    }
    double mean() const { return count > 0 ? sum / static_cast<double>(count) : 0.0; }
    double variance() const;
    double stderr_of_mean() const;
};

}  // namespace roughsde
