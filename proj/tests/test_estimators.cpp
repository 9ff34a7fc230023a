#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "roughsde/coefficients.hpp"
#include "roughsde/estimators.hpp"
#include "roughsde/pde.hpp"
#include "roughsde/rng.hpp"
#include "roughsde/sde.hpp"

using namespace roughsde;

namespace {

Vec vec1(double v) {
    Vec x(1);
    x[0] = v;
    return x;
}

SdeProblem ou_problem() {
    return SdeProblem{make_linear_drift(-1.0), make_constant_matrix(Mat::Identity(1, 1)),
                      vec1(1.0)};
}

std::vector<double> sorted_normals(std::uint64_t seed, std::size_t count, double shift) {
    std::vector<double> xs(count);
    for (std::size_t j = 0; j < count; ++j)
        xs[j] = normal_draw(seed, static_cast<std::uint64_t>(j), 0) + shift;
    std::sort(xs.begin(), xs.end());
    return xs;
}

}  // namespace

TEST_CASE("rate fits recover synthetic power laws exactly") {
    for (double target : {1.0, 0.75}) {
        std::vector<RateObservation> obs;
        for (int n = 4; n <= 512; n *= 2)
            obs.push_back({n, 2.7 * std::pow(n, -target), 0.0});
        const auto fit = fit_rate(obs);
        CHECK(fit.exponent == doctest::Approx(target).epsilon(1e-12));
        CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(fit.used_points == 8);
        CHECK(std::exp(fit.intercept) == doctest::Approx(2.7).epsilon(1e-10));

        // Rescaling the errors moves the intercept, not the exponent.
        for (auto& o : obs) o.error *= 1000.0;
        const auto scaled = fit_rate(obs);
        CHECK(scaled.exponent == doctest::Approx(fit.exponent).epsilon(1e-12));
    }
}

TEST_CASE("noise-floored points are excluded; too few survivors is an error") {
    std::vector<RateObservation> obs;
    for (int n = 4; n <= 256; n *= 2)
        obs.push_back({n, std::pow(n, -1.0), 1e-4});
    obs.push_back({512, 1e-4, 1e-4});  // y <= 3 se: floored
    const auto fit = fit_rate(obs);
    CHECK(fit.used_points == 7);
    CHECK(fit.points.back().excluded);
    CHECK(fit.exponent == doctest::Approx(1.0).epsilon(1e-3));

    std::vector<RateObservation> drowned;
    for (int n = 4; n <= 512; n *= 2) drowned.push_back({n, 1e-6, 1e-5});
    CHECK_THROWS_AS(fit_rate(drowned), std::runtime_error);

    CHECK_THROWS_AS(fit_rate({{4, 1.0, 0.0}, {8, 0.5, 0.0}}), std::invalid_argument);
}

TEST_CASE("loglog fit handles general abscissas and curved-data inflation") {
    std::vector<LogLogObservation> obs;
    for (double x : {0.001, 0.004, 0.016, 0.064, 0.256})
        obs.push_back({x, 5.0 * std::pow(x, -0.5), 0.0});
    const auto fit = fit_loglog(obs);
    CHECK(fit.slope == doctest::Approx(-0.5).epsilon(1e-12));

    // Curved data with tiny per-point noise: the honest stderr must cover the
    // curvature, not just the quoted noise.
    std::vector<LogLogObservation> curved;
    for (double x : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0})
        curved.push_back({x, std::pow(x, 1.0 + 0.1 * std::log(x)), 1e-6 * x});
    const auto cfit = fit_loglog(curved);
    CHECK(cfit.slope_stderr > 0.04);
    CHECK(cfit.r_squared < 1.0);
}

TEST_CASE("deterministic scheme errors fit the known contraction rate") {
    // sigma = 0 linear drift: error(n) = |(1-1/n)^n - 1/e| exactly; the fitted
    // exponent of the dyadic ladder 8..1024 is 1.00931252... by direct WLS.
    std::vector<RateObservation> obs;
    for (int n = 8; n <= 1024; n *= 2)
        obs.push_back({n, std::abs(std::pow(1.0 - 1.0 / n, n) - std::exp(-1.0)), 0.0});
    const auto fit = fit_rate(obs);
    CHECK(fit.exponent == doctest::Approx(1.0093125234657485).epsilon(1e-10));
    CHECK(fit.exponent == doctest::Approx(1.0).epsilon(0.02));
    CHECK(fit.r_squared > 0.9999);
}

TEST_CASE("uncoupled weak error sees the euler bias against the exact reference") {
    const double exact = std::exp(-1.0);  // E X_1 for the mean-reverting start 1
    const auto est = weak_error(ou_problem(), make_coordinate_terminal(1), 10, exact,
                                0.0, 100000, 2024, false, 10);
    const double bias = exact - std::pow(0.9, 10);  // +0.0192010...
    CHECK(est.paths == 100000);
    CHECK(est.mean > 0.0);
    CHECK(std::abs(est.mean) > 2.0 * est.stderr_);
    CHECK(std::abs(est.mean - bias) <= 3.0 * est.stderr_);
    CHECK(est.stderr_ == doctest::Approx(0.0021).epsilon(0.5));
    CHECK(est.warning.empty());

    // A sloppy reference is flagged.
    const auto flagged = weak_error(ou_problem(), make_coordinate_terminal(1), 10, exact,
                                    0.05, 2000, 2024, false, 10);
    CHECK(!flagged.warning.empty());
}

TEST_CASE("coupled weak error measures the inter-level bias at reduced variance") {
    const auto coupled = weak_error(ou_problem(), make_coordinate_terminal(1), 10, 0.0,
                                    0.0, 20000, 99, true, 160);
    const double target = std::pow(1.0 - 1.0 / 160.0, 160) - std::pow(0.9, 10);
    CHECK(std::abs(coupled.mean - target) <= 3.0 * coupled.stderr_);

    const auto uncoupled = weak_error(ou_problem(), make_coordinate_terminal(1), 10,
                                      std::exp(-1.0), 0.0, 20000, 99, false, 10);
    CHECK(coupled.stderr_ < 0.2 * uncoupled.stderr_);
}

TEST_CASE("coupled ensembles are deterministic and consistent with their terminals") {
    const auto problem = ou_problem();
    const std::vector<int> ns{4, 8};
    const auto a = run_coupled_ensemble(problem, make_coordinate_terminal(1), ns, 32,
                                        9000, 7, 1, true);
    const auto b = run_coupled_ensemble(problem, make_coordinate_terminal(1), ns, 32,
                                        9000, 7, 3, true);
    REQUIRE(a.levels.size() == 2);
    REQUIRE(a.terminals.size() == 2);
    REQUIRE(a.fine_terminals.size() == 9000);
    CHECK(a.fine_n == 32);

    // Thread count must not change a single bit.
    CHECK(a.fine_mean.mean == b.fine_mean.mean);
    for (std::size_t l = 0; l < a.levels.size(); ++l) {
        CHECK(a.levels[l].diff.mean == b.levels[l].diff.mean);
        CHECK(a.levels[l].diff.stderr_ == b.levels[l].diff.stderr_);
        for (std::size_t p = 0; p < a.terminals[l].size(); ++p)
            CHECK(a.terminals[l][p] == b.terminals[l][p]);
    }

    // Reported means re-derive from the stored terminals.
    for (std::size_t l = 0; l < a.levels.size(); ++l) {
        double sum_diff = 0.0, sum_level = 0.0;
        for (std::size_t p = 0; p < 9000; ++p) {
            sum_diff += a.fine_terminals[p] - a.terminals[l][p];
            sum_level += a.terminals[l][p];
        }
        CHECK(a.levels[l].diff.mean ==
              doctest::Approx(sum_diff / 9000.0).epsilon(1e-12));
        CHECK(a.levels[l].level_mean.mean ==
              doctest::Approx(sum_level / 9000.0).epsilon(1e-12));
    }

    // Each level is the fine path seen through coarsened increments.
    const GridScheme coarse{4};
    const auto table = generate_increments(7, 123, 32, 1);
    const Vec direct = simulate_em(problem, coarse, table);
    CHECK(a.terminals[0][123] == direct[0]);
}

TEST_CASE("wasserstein distance on sorted samples") {
    const auto a = sorted_normals(1, 20000, 0.0);
    CHECK(wasserstein_1d(a, a) == 0.0);

    auto shifted = a;
    for (auto& v : shifted) v += 0.75;
    CHECK(wasserstein_1d(a, shifted) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(wasserstein_1d(shifted, a) == doctest::Approx(0.75).epsilon(1e-12));

    // Independent draws from N(0,1) and N(1/2,1): W1 = 1/2.
    const auto b = sorted_normals(2, 200000, 0.5);
    const auto c = sorted_normals(3, 200000, 0.0);
    CHECK(wasserstein_1d(c, b) == doctest::Approx(0.5).epsilon(0.04));

    // Triangle inequality on three independent clouds of equal size.
    const auto u = sorted_normals(4, 20000, -0.3);
    const auto v = sorted_normals(5, 20000, 0.4);
    CHECK(wasserstein_1d(a, v) <=
          wasserstein_1d(a, u) + wasserstein_1d(u, v) + 1e-12);

    CHECK_THROWS_AS(wasserstein_1d(a, sorted_normals(6, 100, 0.0)),
                    std::invalid_argument);
}

TEST_CASE("quadrature functionals vanish identically for constant coefficients") {
    SdeProblem flat{make_constant_drift(vec1(0.4)),
                    make_constant_matrix(Mat::Identity(1, 1)), vec1(0.0)};
    const auto pde = solve_backward_kolmogorov(flat, make_cos_terminal(1), -10.0, 10.0,
                                               257, 33);
    const auto drift_q = drift_quadrature(flat, pde, 4, 0, 2, 300, 5, 8);
    CHECK(drift_q.estimate.mean == 0.0);
    CHECK(drift_q.estimate.stderr_ == 0.0);
    CHECK(drift_q.excluded == 0);
    CHECK(drift_q.exclusion_fraction == 0.0);

    const auto diff_q = diffusion_quadrature(flat, pde, 4, 0, 0, 300, 5, 8);
    CHECK(diff_q.estimate.mean == 0.0);
    CHECK(diff_q.estimate.stderr_ == 0.0);
}

TEST_CASE("drift quadrature against a hand-rolled walk with unit slope weight") {
    // Zero-drift coordinate terminal keeps u(t,x) = x, so du == 1 and the
    // functional reduces to the plain time integral of b(X_r) - b(X_kappa).
    SdeProblem martingale{make_zero_drift(1),
                          make_constant_matrix(Mat::Identity(1, 1)), vec1(0.0)};
    const auto pde = solve_backward_kolmogorov(martingale, make_coordinate_terminal(1),
                                               -10.0, 10.0, 321, 33,
                                               BoundaryPolicy::dirichlet_terminal);
    CHECK(pde.eval_du(0.5, 0.7) == doctest::Approx(1.0).epsilon(1e-9));

    SdeProblem problem{make_sin_drift(0.9), make_constant_matrix(Mat::Identity(1, 1)),
                       vec1(0.0)};
    const int n = 4, m = 8, paths = 64;
    const std::uint64_t seed = 31;
    const auto q = drift_quadrature(problem, pde, n, 0, 1, paths, seed, m);
    REQUIRE(q.excluded == 0);

    double manual_sum = 0.0;
    const double h = 1.0 / n, dr = 1.0 / (n * m);
    for (std::uint64_t path = 0; path < paths; ++path) {
        const auto table = generate_increments(seed, path, n * m, 1);
        const auto grid = simulate_em_path(problem, GridScheme{n}, table);
        double integral = 0.0;
        Vec dw(1);
        for (int k = 0; k < n; ++k) {
            const double xk = grid.at(k)[0];
            const double bk = 0.9 * std::sin(xk);
            for (int s = 1; s < m; ++s) {
                table.block_sum(k * m, k * m + s, dw);
                const double xr = xk + bk * (s * h / m) + dw[0];
                integral += (0.9 * std::sin(xr) - bk) * dr;
            }
        }
        manual_sum += std::abs(integral);
    }
    CHECK(q.estimate.mean == doctest::Approx(manual_sum / paths).epsilon(1e-7));
    CHECK(q.estimate.stderr_ > 0.0);
}

TEST_CASE("quadrature stabilizes as the sub-step rule refines") {
    SdeProblem problem{make_sin_drift(0.9), make_constant_matrix(Mat::Identity(1, 1)),
                       vec1(0.0)};
    const auto pde = solve_backward_kolmogorov(problem, make_cos_terminal(1), -10.0,
                                               10.0, 321, 33);
    const auto q16 = drift_quadrature(problem, pde, 8, 0, 2, 2000, 11, 16);
    const auto q32 = drift_quadrature(problem, pde, 8, 0, 2, 2000, 11, 32);
    CHECK(std::abs(q16.estimate.mean - q32.estimate.mean) <=
          0.15 * q16.estimate.mean +
              3.0 * std::hypot(q16.estimate.stderr_, q32.estimate.stderr_));
}

TEST_CASE("smoothing probe with constant test function is exactly zero") {
    C1TestFunction constant;
    constant.value = ScalarField{1, [](const Vec&) { return 2.0; }, {1.0, 2.0, 0.0}};
    constant.derivative = ScalarField{1, [](const Vec&) { return 0.0; }, {1.0, 0.0, 0.0}};
    const std::vector<double> times{0.25, 0.5, 1.0};
    const auto pts = smoothing_probe(make_constant_matrix(Mat::Identity(1, 1)), constant,
                                     vec1(0.0), 8, times, 200, 1);
    for (const auto& p : pts) {
        CHECK(p.mean == 0.0);
        CHECK(p.stderr_ == 0.0);
    }
}

TEST_CASE("smoothing probe matches the gaussian closed form for a sine test") {
    // Unit diffusion, no drift: the scheme at grid times is exactly Brownian,
    // so E cos(x0 + W_t) = exp(-t/2) cos(x0).
    C1TestFunction sine;
    sine.value = ScalarField{1, [](const Vec& x) { return std::sin(x[0]); }, {1.0, 1.0, 1.0}};
    sine.derivative =
        ScalarField{1, [](const Vec& x) { return std::cos(x[0]); }, {1.0, 1.0, 1.0}};
    const double x0 = 0.7;
    const std::vector<double> times{1.0 / 64, 1.0 / 8, 0.5, 1.0};
    const auto pts = smoothing_probe(make_constant_matrix(Mat::Identity(1, 1)), sine,
                                     vec1(x0), 64, times, 40000, 17);
    REQUIRE(pts.size() == times.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        CHECK(pts[i].t == times[i]);
        const double target = std::exp(-times[i] / 2.0) * std::cos(x0);
        CHECK(std::abs(pts[i].mean - target) <= 3.0 * pts[i].stderr_);
        CHECK(pts[i].stderr_ > 0.0);
    }

    CHECK_THROWS_AS(smoothing_probe(make_constant_matrix(Mat::Identity(1, 1)), sine,
                                    vec1(x0), 64, std::vector<double>{0.3}, 100, 17),
                    std::invalid_argument);
}

TEST_CASE("importance reweighting reproduces the drifted mean") {
    const auto problem = ou_problem();
    const int n = 16;
    // Uncoupled weak_error reports reference - mean(g); with reference 0 the
    // plain scheme mean is the negation.
    const auto direct = weak_error(problem, make_cos_terminal(1), n, 0.0, 0.0, 60000,
                                   311, false, n);
    const double direct_mean = -direct.mean;
    const auto rw = importance_reweighted_mean(problem, make_cos_terminal(1), n, 60000,
                                               312);
    CHECK(std::abs(rw.weight_mean.mean - 1.0) <= 3.0 * rw.weight_mean.stderr_);
    CHECK(std::abs(rw.reweighted.mean - direct_mean) <=
          3.0 * std::hypot(rw.reweighted.stderr_, direct.stderr_));
    CHECK(rw.reweighted.stderr_ > 0.0);
}
