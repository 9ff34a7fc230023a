#pragma once

#include <cstdint>
#include <vector>

#include "roughsde/coefficients.hpp"

// Gaussian kernel densities and sampled moment identities used as statistical
// ground truth by the estimator tests.

namespace roughsde {

// Covariance-parameterized Gaussian kernel; bandwidth t means covariance t*I.
struct GaussianKernel {
  Mat covariance;

  static GaussianKernel from_bandwidth(double t, int dimension);
};

// Density of N(0, M) at x: det(2 pi M)^{-1/2} exp(-x^T M^{-1} x / 2).
// Throws std::invalid_argument when M is not symmetric positive definite.
double gaussian_density(const Mat& covariance, const Vec& x);

// Closed-form heat kernel p_t(x) = (2 pi t)^{-d/2} exp(-|x|^2 / (2t)).
double heat_kernel_density(double t, const Vec& x);

struct GaussianMomentReport {
  struct OddMoment {
    int i, j, k;
    double mean;
    double stderr_;
  };
  std::vector<OddMoment> odd_moments;  // E[Y_i Y_j Y_k], expected 0
  double alpha = 0.5;
  double delta = 1.0;
  // Sampled E|Z_0|^{1+alpha} for Z ~ N(0, M*delta), its stderr, the same value
  // scaled by delta^{-(1+alpha)/2}, and the closed form for M = I.
  double abs_moment = 0.0;
  double abs_moment_stderr = 0.0;
  double scaled_abs_moment = 0.0;
  double closed_form_unit = 0.0;  // 2^{(1+alpha)/2} Gamma((2+alpha)/2) / sqrt(pi)
};

// Samples N(0, M*delta) with counter-based draws and reports the odd mixed
// moments (expected zero) plus the |Z|^{1+alpha} scaling in delta.
GaussianMomentReport gaussian_moment_checks(const Mat& covariance, double delta, double alpha,
                                            int samples, std::uint64_t rng_seed);

}  // namespace roughsde
