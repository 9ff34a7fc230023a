#include "roughsde/holder.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <fftw3.h>

namespace roughsde {

namespace {

// FFTW planning is not re-entrant; execution on private buffers is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

// Periodic wrap of index deltas to the nearest-image distance.
double wrapped_distance(int i, int j, int n, double dx) {
    int d = std::abs(i - j);
    d = std::min(d, n - d);
    return dx * static_cast<double>(d);
}

}  // namespace

double GriddedFunction::sup_norm() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

GriddedFunction sample_periodic(const std::function<double(double)>& f, double x0,
                                double period, int points) {
    require(points >= 2, "sample_periodic: need at least 2 points");
    require(period > 0.0, "sample_periodic: period must be positive");
    GriddedFunction g;
    g.x0 = x0;
    g.dx = period / static_cast<double>(points);
    g.periodic = true;
    g.values.resize(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) g.values[static_cast<std::size_t>(i)] = f(x0 + g.dx * i);
    return g;
}

GriddedFunction heat_smooth(const GriddedFunction& f, double eps) {
    require(eps > 0.0, "heat_smooth: eps must be positive");
    require(f.periodic, "heat_smooth: periodic samples required");
    const int n = static_cast<int>(f.values.size());
    require(n >= 2, "heat_smooth: degenerate grid");

    const int nc = n / 2 + 1;
    double* in = fftw_alloc_real(static_cast<std::size_t>(n));
    fftw_complex* spec = fftw_alloc_complex(static_cast<std::size_t>(nc));
    fftw_plan fwd, bwd;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fwd = fftw_plan_dft_r2c_1d(n, in, spec, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_c2r_1d(n, spec, in, FFTW_ESTIMATE);
    }
    std::copy(f.values.begin(), f.values.end(), in);
    fftw_execute(fwd);

    const double base = 2.0 * std::numbers::pi / f.period();
    for (int k = 0; k < nc; ++k) {
        const double omega = base * static_cast<double>(k);
        const double mult = std::exp(-0.5 * omega * omega * eps) / n;
        spec[k][0] *= mult;
        spec[k][1] *= mult;
    }
    fftw_execute(bwd);

    GriddedFunction out = f;
    std::copy(in, in + n, out.values.begin());
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
    }
    fftw_free(in);
    fftw_free(spec);
    return out;
}

std::vector<double> geometric_eps_grid(double eps_min, double eps_max, int points) {
    require(points >= 2, "geometric_eps_grid: need at least 2 points");
    require(eps_min > 0.0 && eps_min < eps_max, "geometric_eps_grid: bad range");
    std::vector<double> grid(static_cast<std::size_t>(points));
    const double ratio = std::log(eps_max / eps_min) / (points - 1);
    for (int i = 0; i < points; ++i)
        grid[static_cast<std::size_t>(i)] = eps_min * std::exp(ratio * i);
    grid.back() = eps_max;
    return grid;
}

std::vector<std::pair<double, double>> smoothed_sup_profile(
    const GriddedFunction& f, const std::vector<double>& eps_grid) {
    std::vector<std::pair<double, double>> profile;
    profile.reserve(eps_grid.size());
    for (double eps : eps_grid)
        profile.emplace_back(eps, heat_smooth(f, eps).sup_norm());
    return profile;
}

double negative_holder_norm(const GriddedFunction& f, double alpha,
                            const std::vector<double>& eps_grid) {
    require(alpha < 0.0, "negative_holder_norm: alpha must be negative");
    require(!eps_grid.empty(), "negative_holder_norm: empty eps grid");
    double best = 0.0;
    for (double eps : eps_grid) {
        require(eps > 0.0 && eps <= 1.0, "negative_holder_norm: eps outside (0,1]");
        const double scaled =
            std::pow(eps, -0.5 * alpha) * heat_smooth(f, eps).sup_norm();
        best = std::max(best, scaled);
    }
    return best;
}

double discrete_c_norms(const GriddedFunction& f, int order,
                        std::optional<double> alpha_frac) {
    require(order >= 0 && order <= 2, "discrete_c_norms: order must be 0, 1, or 2");
    require(f.periodic, "discrete_c_norms: periodic samples required");
    const int n = static_cast<int>(f.values.size());
    require(n >= 3, "discrete_c_norms: degenerate grid");
    if (alpha_frac)
        require(*alpha_frac > 0.0 && *alpha_frac <= 1.0,
                "discrete_c_norms: fractional exponent outside (0,1]");

    const auto& v = f.values;
    auto wrap = [n](int i) { return ((i % n) + n) % n; };

    std::vector<double> level(v);
    double norm = f.sup_norm();
    for (int l = 1; l <= order; ++l) {
        std::vector<double> next(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            if (l == 1)
                next[static_cast<std::size_t>(i)] =
                    (v[static_cast<std::size_t>(wrap(i + 1))] -
                     v[static_cast<std::size_t>(wrap(i - 1))]) /
                    (2.0 * f.dx);
            else
                next[static_cast<std::size_t>(i)] =
                    (v[static_cast<std::size_t>(wrap(i + 1))] -
                     2.0 * v[static_cast<std::size_t>(i)] +
                     v[static_cast<std::size_t>(wrap(i - 1))]) /
                    (f.dx * f.dx);
        }
        level.swap(next);
        double sup = 0.0;
        for (double x : level) sup = std::max(sup, std::abs(x));
        norm += sup;
    }

    if (alpha_frac) {
        double quotient = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                const double dist = wrapped_distance(i, j, n, f.dx);
                if (dist == 0.0) continue;
                const double gap = std::abs(level[static_cast<std::size_t>(i)] -
                                            level[static_cast<std::size_t>(j)]);
                quotient = std::max(quotient, gap / std::pow(dist, *alpha_frac));
            }
        norm += quotient;
    }
    return norm;
}

}  // namespace roughsde
