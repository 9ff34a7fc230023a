#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>
#include <vector>

#include "roughsde/coefficients.hpp"
#include "roughsde/estimators.hpp"
#include "roughsde/pde.hpp"
#include "roughsde/sde.hpp"

using namespace roughsde;

namespace {

Vec vec1(double v) {
    Vec x(1);
    x[0] = v;
    return x;
}

SdeProblem rough_problem() {
    return SdeProblem{
        make_weierstrass_drift(0.5, 1.0, 2, 12, {}),
        make_elliptic_diffusion(1.0, 0.3, make_sin_modulation(1), 1.0),
        vec1(0.5)};
}

}  // namespace

static void BM_GenerateIncrements(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    std::uint64_t path = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(generate_increments(42, path++, n, 1));
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_GenerateIncrements)->Arg(256)->Arg(4096);

static void BM_WeierstrassDrift(benchmark::State& state) {
    const auto b = make_weierstrass_drift(0.5, 1.0, 2, static_cast<int>(state.range(0)), {});
    Vec x = vec1(0.3), out(1);
    for (auto _ : state) {
        b.evaluate(x, out);
        benchmark::DoNotOptimize(out[0]);
        x[0] += 1e-6;
    }
}
BENCHMARK(BM_WeierstrassDrift)->Arg(4)->Arg(12);

static void BM_EulerPathFine(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto problem = rough_problem();
    const GridScheme scheme{n};
    std::uint64_t path = 0;
    for (auto _ : state) {
        const IncrementTable table = generate_increments(7, path++, n, 1);
        benchmark::DoNotOptimize(simulate_em(problem, scheme, table));
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_EulerPathFine)->Arg(1024)->Arg(16384);

static void BM_EulerCoarseFromFineTable(benchmark::State& state) {
    // Coarse grid reading block sums out of a 16x finer increment table, the
    // inner loop of every coupled difference.
    const int n = static_cast<int>(state.range(0));
    const auto problem = rough_problem();
    const GridScheme scheme{n};
    const IncrementTable table = generate_increments(7, 0, 16 * n, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate_em(problem, scheme, table));
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_EulerCoarseFromFineTable)->Arg(64)->Arg(1024);

static void BM_GirsanovWeight(benchmark::State& state) {
    const auto problem = rough_problem();
    const GridScheme scheme{256};
    const IncrementTable table = generate_increments(11, 0, 256, 1);
    const GridPath path = simulate_em_path(problem, scheme, table);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            girsanov_weight(path, problem.drift, problem.diffusion, table).weight());
    }
}
BENCHMARK(BM_GirsanovWeight);

static void BM_Wasserstein1d(benchmark::State& state) {
    const std::size_t m = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    std::vector<double> a(m), b(m);
    for (std::size_t i = 0; i < m; ++i) {
        a[i] = normal(rng);
        b[i] = normal(rng) + 0.5;
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    for (auto _ : state) {
        benchmark::DoNotOptimize(wasserstein_1d(a, b));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m));
}
BENCHMARK(BM_Wasserstein1d)->Arg(100000);

static void BM_PdeSolve(benchmark::State& state) {
    const int m_x = static_cast<int>(state.range(0));
    const int m_t = static_cast<int>(state.range(1));
    const SdeProblem heat{make_zero_drift(1),
                          make_constant_matrix(Mat::Identity(1, 1)), vec1(0.0)};
    const auto terminal = make_sin_terminal(1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            solve_backward_kolmogorov(heat, terminal, -9.0, 9.0, m_x, m_t));
    }
}
BENCHMARK(BM_PdeSolve)->Args({257, 33})->Args({513, 65});

BENCHMARK_MAIN();
