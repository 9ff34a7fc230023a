#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "roughsde/coefficients.hpp"
#include "roughsde/pde.hpp"

using namespace roughsde;

namespace {

Vec vec1(double v) {
    Vec x(1);
    x[0] = v;
    return x;
}

// Zero drift, sigma = 1: u(t,x) = e^{-(1-t)/2} sin(x) solves the backward
// heat equation with terminal sin.
SdeProblem heat_problem(double x0 = 0.0) {
    return SdeProblem{make_zero_drift(1), make_constant_matrix(Mat::Identity(1, 1)),
                      vec1(x0)};
}

double heat_solution(double t, double x) { return std::exp(-(1.0 - t) / 2.0) * std::sin(x); }

// Restrict to the middle half of the domain: the Neumann walls carry a
// resolution-independent flux-mismatch layer that decays over an O(1)
// distance, so points near the edge never converge to the free-space
// solution.
double max_interior_error(const PdeSolution& sol) {
    double worst = 0.0;
    const int m_x = sol.space_points();
    for (int ti = 0; ti < sol.time_points(); ++ti)
        for (int xi = m_x / 4; xi <= 3 * m_x / 4; ++xi) {
            const double exact = heat_solution(sol.times()[ti], sol.space()[xi]);
            worst = std::max(worst, std::abs(sol.u_at(ti, xi) - exact));
        }
    return worst;
}

}  // namespace

TEST_CASE("backward heat equation matches the separable solution") {
    const auto sol = solve_backward_kolmogorov(heat_problem(), make_sin_terminal(1),
                                               -9.0, 9.0, 513, 65);
    CHECK(sol.times().front() == 1.0);
    CHECK(sol.times().back() == 0.0);
    CHECK(max_interior_error(sol) < 2e-4);

    // Interpolated values and the slope field follow the closed form.
    CHECK(sol.eval_u(0.37, 0.9) ==
          doctest::Approx(heat_solution(0.37, 0.9)).epsilon(5e-4));
    CHECK(sol.eval_du(0.5, 0.3) ==
          doctest::Approx(std::exp(-0.25) * std::cos(0.3)).epsilon(5e-3));
    CHECK(sol.eval_d2u(0.5, 0.3) ==
          doctest::Approx(-heat_solution(0.5, 0.3)).epsilon(5e-2));
    CHECK_THROWS_AS(sol.eval_u(0.5, 9.5), std::domain_error);
}

TEST_CASE("space-time refinement shrinks the error at second order") {
    const auto coarse = solve_backward_kolmogorov(heat_problem(), make_sin_terminal(1),
                                                  -9.0, 9.0, 129, 17);
    const auto fine = solve_backward_kolmogorov(heat_problem(), make_sin_terminal(1),
                                                -9.0, 9.0, 257, 33);
    const double ratio = max_interior_error(coarse) / max_interior_error(fine);
    CHECK(ratio > 3.0);
    CHECK(ratio < 5.0);
}

TEST_CASE("feynman-kac reference hits the closed form within its own estimate") {
    // Terminal cos from x0 = 0.4: u(0,x0) = e^{-1/2} cos(x0).
    const auto res =
        feynman_kac_reference(heat_problem(0.4), make_cos_terminal(1), 1e-6);
    const double exact = 0.606530659712633423 * std::cos(0.4);
    CHECK(std::abs(res.value - exact) < 1e-6);
    CHECK(res.error_estimate <= 1e-6);
    CHECK(res.refinements >= 1);
}

TEST_CASE("boundary policies agree away from the boundary, differ near it") {
    const auto neu = solve_backward_kolmogorov(heat_problem(), make_cos_terminal(1),
                                               -9.0, 9.0, 257, 33);
    const auto dir = solve_backward_kolmogorov(heat_problem(), make_cos_terminal(1),
                                               -9.0, 9.0, 257, 33,
                                               BoundaryPolicy::dirichlet_terminal);
    CHECK(neu.eval_u(0.0, 0.0) == doctest::Approx(dir.eval_u(0.0, 0.0)).epsilon(1e-6));

    // On a domain comparable to the diffusive scale the policies must not agree.
    const auto neu_narrow = solve_backward_kolmogorov(
        heat_problem(), make_cos_terminal(1), -1.5, 1.5, 129, 33);
    const auto dir_narrow = solve_backward_kolmogorov(
        heat_problem(), make_cos_terminal(1), -1.5, 1.5, 129, 33,
        BoundaryPolicy::dirichlet_terminal);
    CHECK(std::abs(neu_narrow.eval_u(0.0, 1.2) - dir_narrow.eval_u(0.0, 1.2)) > 1e-3);
}

TEST_CASE("grid peclet violations refine and warn") {
    // |b| dx = 1.5 > sigma^2 = 1 on the requested grid; one halving fixes it.
    SdeProblem problem{make_constant_drift(vec1(3.0)),
                       make_constant_matrix(Mat::Identity(1, 1)), vec1(0.0)};
    const auto sol =
        solve_backward_kolmogorov(problem, make_cos_terminal(1), -4.0, 4.0, 17, 33);
    CHECK(sol.warnings().size() == 1);
    CHECK(sol.space_points() == 33);

    // A violation the refinement budget cannot absorb is an error.
    SdeProblem violent{make_constant_drift(vec1(40.0)),
                       make_constant_matrix(Mat::Identity(1, 1) * 0.5), vec1(0.0)};
    CHECK_THROWS_AS(
        solve_backward_kolmogorov(violent, make_cos_terminal(1), -4.0, 4.0, 17, 33),
        std::runtime_error);
}

TEST_CASE("degenerate diffusion is rejected") {
    SdeProblem flat{make_zero_drift(1), make_constant_matrix(Mat::Zero(1, 1)), vec1(0.0)};
    CHECK_THROWS(solve_backward_kolmogorov(flat, make_sin_terminal(1), -1.0, 1.0, 65, 17));
}

TEST_CASE("schauder profile of a smooth solution stays bounded") {
    const auto sol = solve_backward_kolmogorov(heat_problem(), make_sin_terminal(1),
                                               -8.0, 8.0, 513, 65);
    const auto profile = schauder_profile(sol, 1, 1.0);
    REQUIRE(profile.points.size() == sol.times().size());
    CHECK(profile.gamma == 1);
    CHECK(profile.beta == 1.0);
    double worst = 0.0;
    for (const auto& p : profile.points) worst = std::max(worst, p.top_seminorm);
    // d_x u = e^{-(1-t)/2} cos x, so the seminorm never exceeds ~1.
    CHECK(worst < 1.2);
    CHECK(worst > 0.8);
    for (const auto& p : profile.points) CHECK(p.c_norm >= p.top_seminorm);
}

TEST_CASE("rough terminal data blows up toward t = 1 in the slope seminorm") {
    const auto sol = solve_backward_kolmogorov(heat_problem(), make_sqrt_abs_sin_terminal(1),
                                               -8.0, 8.0, 2049, 129);
    const auto profile = schauder_profile(sol, 1, 0.5);
    // Compare the slope seminorm near t=1 against a mid-interval value.
    double near_terminal = 0.0, mid = 0.0;
    for (const auto& p : profile.points) {
        if (p.t > 0.995) near_terminal = std::max(near_terminal, p.top_seminorm);
        if (p.t > 0.45 && p.t < 0.55) mid = std::max(mid, p.top_seminorm);
    }
    CHECK(near_terminal > 2.0 * mid);
}
