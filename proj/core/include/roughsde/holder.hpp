#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace roughsde {

// Samples of a function on a uniform 1D grid; periodic means the grid covers
// one full period cell [x0, x0 + size*dx).
struct GriddedFunction {
    double x0 = 0.0;
    double dx = 0.0;
    bool periodic = true;
    std::vector<double> values;

    double period() const { return dx * static_cast<double>(values.size()); }
    double sup_norm() const;
};

GriddedFunction sample_periodic(const std::function<double(double)>& f, double x0,
                                double period, int points);

// Circular convolution with the wrapped heat kernel of variance eps, done in
// the Fourier basis (mode k picks up exp(-omega_k^2 eps / 2)). Exact for
// band-limited data; preserves constants.
GriddedFunction heat_smooth(const GriddedFunction& f, double eps);

// 61-point geometric ladders like [1e-6, 1] for the norm's sup over eps.
std::vector<double> geometric_eps_grid(double eps_min = 1e-6, double eps_max = 1.0,
                                       int points = 61);

// sup over the eps grid of eps^{-alpha/2} * sup|heat_smooth(f, eps)| for
// alpha < 0; a lower bound for the sup over all of (0,1].
double negative_holder_norm(const GriddedFunction& f, double alpha,
                            const std::vector<double>& eps_grid);

// (eps, sup|heat_smooth(f, eps)|) profile, the raw material of the norm.
std::vector<std::pair<double, double>> smoothed_sup_profile(
    const GriddedFunction& f, const std::vector<double>& eps_grid);

// Discrete C^order norm: sup|f|, plus sup of centered first (order >= 1) and
// second (order = 2) differences, plus the grid Holder quotient of the
// highest difference when alpha_frac is given.
double discrete_c_norms(const GriddedFunction& f, int order,
                        std::optional<double> alpha_frac = std::nullopt);

}  // namespace roughsde
