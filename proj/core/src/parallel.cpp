#include "roughsde/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <thread>
#include <vector>

namespace roughsde {

int resolve_thread_count(int requested) {
    if (requested < 0) throw std::invalid_argument("thread count must be >= 0");
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

int block_count(std::int64_t total, std::int64_t block_size) {
    if (total <= 0) return 0;
    return static_cast<int>((total + block_size - 1) / block_size);
}

void run_path_blocks(std::int64_t total, std::int64_t block_size, int threads,
                     const std::function<void(int, std::int64_t, std::int64_t)>& body) {
    if (block_size <= 0) throw std::invalid_argument("block_size must be positive");
    const int blocks = block_count(total, block_size);
    if (blocks == 0) return;
    threads = std::min(resolve_thread_count(threads), blocks);

    auto run_block = [&](int bi) {
        const std::int64_t first = static_cast<std::int64_t>(bi) * block_size;
        const std::int64_t last = std::min(total, first + block_size);
        body(bi, first, last);
    };

    if (threads <= 1) {
        for (int bi = 0; bi < blocks; ++bi) run_block(bi);
        return;
    }

    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto worker = [&]() {
        try {
            for (;;) {
                const int bi = next.fetch_add(1);
                if (bi >= blocks || failed.load()) return;
                run_block(bi);
            }
        } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failed.load()) std::rethrow_exception(failure);
}

double MeanAccumulator::variance() const {
    if (count < 2) return 0.0;
    const double n = static_cast<double>(count);
    const double m = sum / n;
    return std::max(0.0, (sum_sq - n * m * m) / (n - 1.0));
}

double MeanAccumulator::stderr_of_mean() const {
    if (count < 1) return 0.0;
    return std::sqrt(variance() / static_cast<double>(count));
}

}  // namespace roughsde
