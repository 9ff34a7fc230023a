#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "roughsde/parallel.hpp"
#include "roughsde/rng.hpp"

using namespace roughsde;

TEST_CASE("thread count resolution") {
    CHECK(resolve_thread_count(1) == 1);
    CHECK(resolve_thread_count(5) == 5);
    CHECK(resolve_thread_count(0) >= 1);
}

TEST_CASE("block partition covers the range exactly once") {
    const std::int64_t total = 1003, block = 64;
    REQUIRE(block_count(total, block) == 16);

    std::vector<std::int64_t> hits(total, 0);
    std::vector<std::int64_t> firsts(16, -1), lasts(16, -1);
    run_path_blocks(total, block, 3, [&](int bi, std::int64_t first, std::int64_t last) {
        firsts[bi] = first;
        lasts[bi] = last;
        for (std::int64_t p = first; p < last; ++p) ++hits[p];
    });
    for (std::int64_t p = 0; p < total; ++p) CHECK(hits[p] == 1);
    for (int bi = 0; bi < 16; ++bi) {
        CHECK(firsts[bi] == bi * block);
        CHECK(lasts[bi] == std::min<std::int64_t>((bi + 1) * block, total));
    }
}

TEST_CASE("per-block reductions merge independently of the thread count") {
    const std::int64_t total = 40000, block = 512;
    const int blocks = block_count(total, block);

    auto reduce = [&](int threads) {
        std::vector<MeanAccumulator> slots(blocks);
        run_path_blocks(total, block, threads,
                        [&](int bi, std::int64_t first, std::int64_t last) {
                            for (std::int64_t p = first; p < last; ++p)
                                slots[bi].add(normal_draw(17, static_cast<std::uint64_t>(p), 0));
                        });
        MeanAccumulator all;
        for (const auto& s : slots) all.merge(s);
        return all;
    };

    const auto serial = reduce(1);
    const auto threaded = reduce(4);
    CHECK(serial.sum == threaded.sum);  // bitwise, order-fixed merge
    CHECK(serial.sum_sq == threaded.sum_sq);
    CHECK(serial.count == threaded.count);
    CHECK(std::abs(serial.mean()) <= 3.0 * serial.stderr_of_mean());
    CHECK(serial.variance() == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("worker exceptions surface to the caller") {
    CHECK_THROWS_AS(
        run_path_blocks(100, 10, 3,
                        [](int bi, std::int64_t, std::int64_t) {
                            if (bi == 7) throw std::runtime_error("boom");
                        }),
        std::runtime_error);
}

TEST_CASE("accumulator moments match a two-pass evaluation") {
    std::vector<double> xs;
    MeanAccumulator acc;
    for (int j = 0; j < 1000; ++j) {
        const double x = std::sin(0.1 * j) + 0.01 * j;
        xs.push_back(x);
        acc.add(x);
    }
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size() - 1);

    CHECK(acc.mean() == doctest::Approx(mean).epsilon(1e-12));
    CHECK(acc.variance() == doctest::Approx(var).epsilon(1e-9));
    CHECK(acc.stderr_of_mean() ==
          doctest::Approx(std::sqrt(var / 1000.0)).epsilon(1e-9));
    CHECK(MeanAccumulator{}.stderr_of_mean() == 0.0);
}
