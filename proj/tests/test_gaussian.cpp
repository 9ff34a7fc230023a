#include <doctest.h>

#include <cmath>

#include "roughsde/gaussian.hpp"

using namespace roughsde;

TEST_CASE("heat kernel density at the origin") {
    Vec x(1);
    x[0] = 0.0;
    // (2 pi)^{-1/2} = 0.398942280401432677...
    CHECK(std::abs(heat_kernel_density(1.0, x) - 0.398942280401432677) < 1e-15);
    x[0] = 1.3;
    CHECK(heat_kernel_density(2.0, x) ==
          doctest::Approx(std::exp(-1.3 * 1.3 / 4.0) / std::sqrt(4.0 * M_PI))
              .epsilon(1e-13));
}

TEST_CASE("gaussian density agrees with the heat kernel for M = tI") {
    Vec x(2);
    x << 0.4, -0.9;
    Mat m = Mat::Identity(2, 2) * 0.7;
    CHECK(gaussian_density(m, x) == doctest::Approx(heat_kernel_density(0.7, x)).epsilon(1e-13));
    Mat bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;  // indefinite
    CHECK_THROWS(gaussian_density(bad, x));
}

TEST_CASE("heat kernel mass is one") {
    // Trapezoid over [-12, 12]; the tail below 1e-30 cannot disturb 1e-9.
    const double h = 0.004;
    double mass = 0.0;
    Vec x(1);
    for (double v = -12.0; v <= 12.0 + 1e-12; v += h) {
        x[0] = v;
        mass += heat_kernel_density(1.0, x) * h;
    }
    CHECK(std::abs(mass - 1.0) < 1e-9);
}

TEST_CASE("odd gaussian moments vanish and |Z|^{1+alpha} scales in delta") {
    Mat m(2, 2);
    m << 1.0, 0.3, 0.3, 0.8;
    const auto unit = gaussian_moment_checks(m, 1.0, 0.5, 200000, 99);

    for (const auto& om : unit.odd_moments)
        CHECK(std::abs(om.mean) <= 3.0 * om.stderr_);

    // 2^{3/4} Gamma(7/4) / sqrt(pi) = 0.860039987324519535...
    CHECK(std::abs(unit.closed_form_unit - 0.860039987324519535) < 1e-14);

    const auto identity =
        gaussian_moment_checks(Mat::Identity(1, 1), 1.0, 0.5, 200000, 7);
    CHECK(std::abs(identity.abs_moment - identity.closed_form_unit) <=
          3.0 * identity.abs_moment_stderr);

    // Shrinking the bandwidth by delta scales the moment by delta^{3/4}.
    const auto shrunk =
        gaussian_moment_checks(Mat::Identity(1, 1), 0.25, 0.5, 200000, 7);
    CHECK(std::abs(shrunk.scaled_abs_moment - shrunk.closed_form_unit) <=
          3.0 * shrunk.abs_moment_stderr * std::pow(0.25, -0.75));
}
