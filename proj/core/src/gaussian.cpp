#include "roughsde/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "roughsde/rng.hpp"

namespace roughsde {

GaussianKernel GaussianKernel::from_bandwidth(double t, int dimension) {
  if (!(t >= 0.0)) throw std::invalid_argument("bandwidth must be nonnegative");
  GaussianKernel kernel;
  kernel.covariance = t * Mat::Identity(dimension, dimension);
  return kernel;
}

double gaussian_density(const Mat& covariance, const Vec& x) {
  const auto d = covariance.rows();
  if (covariance.cols() != d || x.size() != d)
    throw std::invalid_argument("covariance/point dimension mismatch");
  if (!covariance.isApprox(covariance.transpose(), 1e-12))
    throw std::invalid_argument("covariance must be symmetric");
  const Eigen::LLT<Mat> llt(covariance);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("covariance must be positive definite");
  const Mat L = llt.matrixL();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(L(i, i) > 0.0)) throw std::invalid_argument("degenerate covariance");
    log_det += std::log(L(i, i));
  }
  const Vec y = llt.matrixL().solve(x);  // y = L^{-1} x, so |y|^2 = x^T M^{-1} x
  const double quad = y.squaredNorm();
  const double log_norm =
      -0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi) - log_det;
  return std::exp(log_norm - 0.5 * quad);
}

double heat_kernel_density(double t, const Vec& x) {
  if (!(t > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  const double d = static_cast<double>(x.size());
  return std::pow(2.0 * std::numbers::pi * t, -0.5 * d) *
         std::exp(-x.squaredNorm() / (2.0 * t));
}

GaussianMomentReport gaussian_moment_checks(const Mat& covariance, double delta, double alpha,
                                            int samples, std::uint64_t rng_seed) {
  const int d = static_cast<int>(covariance.rows());
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in (0,1]");
  if (samples < 2) throw std::invalid_argument("need at least 2 samples");
  const Eigen::LLT<Mat> llt(Mat(covariance * delta));
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("covariance must be positive definite");
  const Mat L = llt.matrixL();

  // Accumulate all distinct index triples i <= j <= k (total degree 3 is odd,
  // so every such mixed moment vanishes for a centered Gaussian).
  std::vector<GaussianMomentReport::OddMoment> triples;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      for (int k = j; k < d; ++k) triples.push_back({i, j, k, 0.0, 0.0});
  std::vector<double> sum(triples.size(), 0.0), sum_sq(triples.size(), 0.0);
  double abs_sum = 0.0, abs_sum_sq = 0.0;

  Vec z(d), y(d);
  for (int s = 0; s < samples; ++s) {
    for (int c = 0; c < d; ++c)
      z[c] = normal_draw(rng_seed, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(c));
    y = L * z;
    for (std::size_t t = 0; t < triples.size(); ++t) {
      const double v = y[triples[t].i] * y[triples[t].j] * y[triples[t].k];
      sum[t] += v;
      sum_sq[t] += v * v;
    }
    const double a = std::pow(std::abs(y[0]), 1.0 + alpha);
    abs_sum += a;
    abs_sum_sq += a * a;
  }

  GaussianMomentReport report;
  report.alpha = alpha;
  report.delta = delta;
  const double inv_n = 1.0 / samples;
  for (std::size_t t = 0; t < triples.size(); ++t) {
    triples[t].mean = sum[t] * inv_n;
    const double var = (sum_sq[t] - sum[t] * sum[t] * inv_n) / (samples - 1);
    triples[t].stderr_ = std::sqrt(std::max(var, 0.0) * inv_n);
  }
  report.odd_moments = std::move(triples);
  report.abs_moment = abs_sum * inv_n;
  const double abs_var = (abs_sum_sq - abs_sum * abs_sum * inv_n) / (samples - 1);
  report.abs_moment_stderr = std::sqrt(std::max(abs_var, 0.0) * inv_n);
  report.scaled_abs_moment = report.abs_moment * std::pow(delta, -0.5 * (1.0 + alpha));
  report.closed_form_unit = std::pow(2.0, 0.5 * (1.0 + alpha)) *
                            std::tgamma(0.5 * (2.0 + alpha)) / std::sqrt(std::numbers::pi);
  return report;
}

}  // namespace roughsde
