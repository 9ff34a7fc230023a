#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "roughsde/coefficients.hpp"
#include "roughsde/pde.hpp"
#include "roughsde/sde.hpp"

namespace roughsde {

struct CIEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::int64_t paths = 0;
    std::string warning;
};

struct RateObservation {
    int n = 0;
    double error = 0.0;
    double error_stderr = 0.0;
};

struct RatePoint {
    int n = 0;
    double error = 0.0;
    double error_stderr = 0.0;
    bool excluded = false;
};

struct RateFit {
    double exponent = 0.0;
    double exponent_stderr = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int used_points = 0;
    std::vector<RatePoint> points;
};

struct LogLogObservation {
    double x = 0.0;
    double y = 0.0;
    double y_stderr = 0.0;
};

struct LogLogPoint {
    double x = 0.0;
    double y = 0.0;
    double y_stderr = 0.0;
    bool excluded = false;
};

struct LogLogFit {
    double slope = 0.0;
    double slope_stderr = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int used_points = 0;
    std::vector<LogLogPoint> points;
};

// Weighted least squares of log(y) on log(x). Points with y <= 3 * stderr
// are excluded as noise floor; fewer than 3 surviving points is an error.
// Zero-stderr inputs (deterministic data) fall back to an unweighted fit;
// otherwise the slope stderr is inflated by reduced chi^2 so it stays honest
// on curved data.
LogLogFit fit_loglog(const std::vector<LogLogObservation>& observations);

// fit_loglog specialized to rate points: the exponent is the negated slope
// of log(error) against log(n).
RateFit fit_rate(const std::vector<RateObservation>& observations);

struct CoupledLevel {
    int n = 0;
    CIEstimate diff;        // signed mean of g(X^fine) - g(X^n)
    CIEstimate level_mean;  // mean of g(X^n)
};

// One coupled pass: per path one increment table at fine_n drives the fine
// leg and every coarse resolution, so level differences share the Brownian
// path. Terminal first coordinates are kept in path order when requested
// (the Wasserstein study sorts them later).
struct CoupledEnsemble {
    int fine_n = 0;
    std::int64_t paths = 0;
    CIEstimate fine_mean;
    std::vector<CoupledLevel> levels;
    std::vector<std::vector<double>> terminals;  // one block per level
    std::vector<double> fine_terminals;
};

CoupledEnsemble run_coupled_ensemble(const SdeProblem& problem, const ScalarField& g,
                                     std::span<const int> ns, int fine_n,
                                     std::int64_t paths, std::uint64_t master_seed,
                                     int threads = 1, bool store_terminals = false);

// Single-resolution weak error, signed as reference-side minus scheme side.
// Uncoupled: reference - mean g(X^n), with MC stderr. Coupled: mean of
// g(X^fine) - g(X^n) (the fine leg stands in for the reference; its bias is
// the fine solve's business). A reference error estimate above the MC radius
// attaches a warning.
CIEstimate weak_error(const SdeProblem& problem, const ScalarField& g, int n,
                      double reference, double reference_error, std::int64_t paths,
                      std::uint64_t master_seed, bool coupled, int fine_n,
                      int threads = 1);

// Mean |a_(i) - b_(i)| over order statistics: the 1D optimal coupling.
// Inputs must be sorted and of equal size.
double wasserstein_1d(std::span<const double> sorted_a, std::span<const double> sorted_b);

struct QuadratureResult {
    CIEstimate estimate;
    std::int64_t excluded = 0;
    double exclusion_fraction = 0.0;
};

// E[ |int_0^1 (b_i(X_r) - b_i(X_kappa)) du(r, X_r) dr|^p ]^(1/p) by the
// composite sub-step rule (sub_steps points per coarse step), with bootstrap
// stderr. Paths leaving the PDE hull are excluded and counted.
QuadratureResult drift_quadrature(const SdeProblem& problem, const PdeSolution& pde,
                                  int n, int coordinate, int p, std::int64_t paths,
                                  std::uint64_t master_seed, int sub_steps = 16,
                                  int threads = 1);

// |E int_0^1 (h(X_r) - h(X_kappa)) d2u(r, X_r) dr| with h = (sigma sigma^T)_{ij};
// stderr is the CLT stderr of the signed mean.
QuadratureResult diffusion_quadrature(const SdeProblem& problem, const PdeSolution& pde,
                                      int n, int ci, int cj, std::int64_t paths,
                                      std::uint64_t master_seed, int sub_steps = 16,
                                      int threads = 1);

struct SmoothingPoint {
    double t = 0.0;
    double mean = 0.0;    // signed E dG(X_bar_t)
    double stderr_ = 0.0;
};

// |E dG(X_bar_t)| along the driftless scheme at the requested grid times;
// downstream fits compare the decay against t^{-1/2}.
std::vector<SmoothingPoint> smoothing_probe(const MatrixField& sigma,
                                            const C1TestFunction& test, const Vec& start,
                                            int n, std::span<const double> times,
                                            std::int64_t paths, std::uint64_t master_seed,
                                            int threads = 1);

// E g drifted ensemble via importance-reweighted driftless paths:
// mean of g(X_bar) * w and the weight diagnostics. Used by the
// change-of-measure cross-checks.
struct ReweightedEstimate {
    CIEstimate reweighted;   // mean g(X_bar) w with stderr
    CIEstimate weight_mean;  // mean w (should be 1 within noise)
};

ReweightedEstimate importance_reweighted_mean(const SdeProblem& problem,
                                              const ScalarField& g, int n,
                                              std::int64_t paths,
                                              std::uint64_t master_seed,
                                              int threads = 1);

}  // namespace roughsde
