#include "roughsde/sde.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/LU>

#include "roughsde/rng.hpp"

namespace roughsde {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

void check_finite(const Vec& x, int step, const char* where) {
    if (!x.allFinite())
        throw std::runtime_error(std::string(where) + ": state not finite at step " +
                                 std::to_string(step));
}

int coupling_ratio(const GridScheme& scheme, const IncrementTable& table) {
    require(scheme.n >= 1, "GridScheme: n must be positive");
    require(table.fine_n() >= 1, "IncrementTable: empty table");
    require(table.fine_n() % scheme.n == 0,
            "simulate: table resolution must be a multiple of scheme.n");
    return table.fine_n() / scheme.n;
}

}  // namespace

double GridScheme::kappa(double t) const {
    return std::floor(static_cast<double>(n) * t) / static_cast<double>(n);
}

IncrementTable::IncrementTable(int fine_n, int dimension, std::uint64_t master_seed,
                               std::uint64_t path, std::vector<double> increments)
    : fine_n_(fine_n),
      dimension_(dimension),
      master_seed_(master_seed),
      path_(path),
      increments_(std::move(increments)) {
    require(fine_n_ >= 1 && dimension_ >= 1, "IncrementTable: degenerate shape");
    require(increments_.size() == static_cast<std::size_t>(fine_n_) *
                                      static_cast<std::size_t>(dimension_),
            "IncrementTable: size mismatch");
}

void IncrementTable::block_sum(int first, int last, Vec& out) const {
    out.setZero(dimension_);
    for (int j = first; j < last; ++j) {
        const double* r = row(j);
        for (int c = 0; c < dimension_; ++c) out[c] += r[c];
    }
}

IncrementTable generate_increments(std::uint64_t master_seed, std::uint64_t path,
                                   int fine_n, int dimension) {
    require(fine_n >= 1, "generate_increments: fine_n must be positive");
    require(dimension >= 1 && dimension <= kMaxDim,
            "generate_increments: dimension out of range");
    const double scale = 1.0 / std::sqrt(static_cast<double>(fine_n));
    std::vector<double> incr(static_cast<std::size_t>(fine_n) *
                             static_cast<std::size_t>(dimension));
    const std::uint64_t total = incr.size();
    for (std::uint64_t j = 0; j < total; ++j)
        incr[j] = scale * normal_draw(master_seed, path, j);
    return IncrementTable(fine_n, dimension, master_seed, path, std::move(incr));
}

IncrementTable coarsen_increments(const IncrementTable& table, int coarse_n) {
    require(coarse_n >= 1, "coarsen_increments: coarse_n must be positive");
    require(table.fine_n() % coarse_n == 0,
            "coarsen_increments: coarse_n must divide fine_n");
    const int ratio = table.fine_n() / coarse_n;
    const int d = table.dimension();
    std::vector<double> incr(static_cast<std::size_t>(coarse_n) *
                             static_cast<std::size_t>(d));
    Vec block(d);
    for (int k = 0; k < coarse_n; ++k) {
        table.block_sum(k * ratio, (k + 1) * ratio, block);
        for (int c = 0; c < d; ++c)
            incr[static_cast<std::size_t>(k) * static_cast<std::size_t>(d) + c] =
                block[c];
    }
    return IncrementTable(coarse_n, d, table.master_seed(), table.path(),
                          std::move(incr));
}

Vec GridPath::at(int step) const {
    Vec out(dimension);
    const double* r = positions.data() +
                      static_cast<std::size_t>(step) * static_cast<std::size_t>(dimension);
    for (int c = 0; c < dimension; ++c) out[c] = r[c];
    return out;
}

double GirsanovWeight::weight() const { return std::exp(log_weight); }

namespace {

// Shared stepping core; Record decides whether grid positions are kept.
template <bool Record>
GridPath run_em(const VectorField* drift, const MatrixField& sigma, const Vec& start,
                const GridScheme& scheme, const IncrementTable& table) {
    const int ratio = coupling_ratio(scheme, table);
    const int d = table.dimension();
    require(sigma.dimension == d, "simulate: diffusion dimension mismatch");
    require(static_cast<int>(start.size()) == d, "simulate: start dimension mismatch");
    if (drift != nullptr)
        require(drift->dimension == d, "simulate: drift dimension mismatch");

    const double h = scheme.step_size();
    Vec x = start;
    Vec bx(d), dw(d);
    Mat sx(d, d);

    GridPath path;
    path.n = scheme.n;
    path.dimension = d;
    if constexpr (Record) {
        path.positions.resize(static_cast<std::size_t>(scheme.n + 1) *
                              static_cast<std::size_t>(d));
        for (int c = 0; c < d; ++c) path.positions[static_cast<std::size_t>(c)] = x[c];
    }

    for (int k = 0; k < scheme.n; ++k) {
        table.block_sum(k * ratio, (k + 1) * ratio, dw);
        sigma.evaluate(x, sx);
        if (drift != nullptr) {
            drift->evaluate(x, bx);
            x += bx * h;
        }
        x += sx * dw;
        check_finite(x, k + 1, "simulate_em");
        if constexpr (Record) {
            double* out = path.positions.data() +
                          static_cast<std::size_t>(k + 1) * static_cast<std::size_t>(d);
            for (int c = 0; c < d; ++c) out[c] = x[c];
        }
    }
    if constexpr (!Record) {
        path.positions.assign(x.data(), x.data() + d);
        path.n = 0;
    }
    return path;
}

}  // namespace

Vec simulate_em(const SdeProblem& problem, const GridScheme& scheme,
                const IncrementTable& table) {
    GridPath p = run_em<false>(&problem.drift, problem.diffusion, problem.start,
                               scheme, table);
    Vec out(p.dimension);
    for (int c = 0; c < p.dimension; ++c) out[c] = p.positions[static_cast<std::size_t>(c)];
    return out;
}

GridPath simulate_em_path(const SdeProblem& problem, const GridScheme& scheme,
                          const IncrementTable& table) {
    return run_em<true>(&problem.drift, problem.diffusion, problem.start, scheme, table);
}

Vec simulate_driftless(const MatrixField& sigma, const Vec& start,
                       const GridScheme& scheme, const IncrementTable& table) {
    GridPath p = run_em<false>(nullptr, sigma, start, scheme, table);
    Vec out(p.dimension);
    for (int c = 0; c < p.dimension; ++c) out[c] = p.positions[static_cast<std::size_t>(c)];
    return out;
}

Vec sub_step_position(const VectorField& drift, const MatrixField& sigma,
                      const GridScheme& scheme, const PathState& state, double r,
                      const IncrementTable& table) {
    const int ratio = coupling_ratio(scheme, table);
    const int d = table.dimension();
    const double h = scheme.step_size();
    const double t_grid = static_cast<double>(state.time_index) * h;
    require(r >= t_grid - 1e-12 && r <= t_grid + h + 1e-12,
            "sub_step_position: r outside the current step");

    const double pos = r * static_cast<double>(table.fine_n());
    const auto j = static_cast<long long>(std::llround(pos));
    require(std::abs(pos - static_cast<double>(j)) < 1e-9,
            "sub_step_position: r not representable on the fine grid");
    const long long first = static_cast<long long>(state.time_index) * ratio;
    require(j >= first && j <= first + ratio,
            "sub_step_position: fine index outside the current step");

    const double delta = r - t_grid;
    Vec bx(d), dw(d);
    Mat sx(d, d);
    drift.evaluate(state.grid_position, bx);
    sigma.evaluate(state.grid_position, sx);
    table.block_sum(static_cast<int>(first), static_cast<int>(j), dw);
    return state.grid_position + bx * delta + sx * dw;
}

namespace {

// Returns (S, H) with S = sum <sigma^-1 b, dW> and H = 1/2 sum |sigma^-1 b|^2 h.
std::pair<double, double> girsanov_terms(const GridPath& path, const VectorField& drift,
                                         const MatrixField& sigma,
                                         const IncrementTable& table) {
    require(path.n >= 1, "girsanov_weight: empty path");
    GridScheme scheme{path.n};
    const int ratio = coupling_ratio(scheme, table);
    const int d = path.dimension;
    require(table.dimension() == d, "girsanov_weight: dimension mismatch");

    const double h = scheme.step_size();
    double s_term = 0.0;
    double h_term = 0.0;
    Vec x(d), bx(d), q(d), dw(d);
    Mat sx(d, d);
    for (int k = 0; k < path.n; ++k) {
        x = path.at(k);
        drift.evaluate(x, bx);
        sigma.evaluate(x, sx);
        if (d == 1) {
            const double s = sx(0, 0);
            if (s == 0.0 || !std::isfinite(s))
                throw std::runtime_error("girsanov_weight: singular diffusion");
            q[0] = bx[0] / s;
        } else {
            Eigen::PartialPivLU<Mat> lu(sx);
            const double det = lu.determinant();
            if (det == 0.0 || !std::isfinite(det))
                throw std::runtime_error("girsanov_weight: singular diffusion");
            q = lu.solve(bx);
        }
        table.block_sum(k * ratio, (k + 1) * ratio, dw);
        s_term += q.dot(dw);
        h_term += 0.5 * q.squaredNorm() * h;
    }
    return {s_term, h_term};
}

}  // namespace

GirsanovWeight girsanov_weight(const GridPath& path, const VectorField& drift,
                               const MatrixField& sigma, const IncrementTable& table) {
    const auto [s_term, h_term] = girsanov_terms(path, drift, sigma, table);
    return GirsanovWeight{-s_term - h_term};
}

GirsanovWeight girsanov_importance_weight(const GridPath& path, const VectorField& drift,
                                          const MatrixField& sigma,
                                          const IncrementTable& table) {
    const auto [s_term, h_term] = girsanov_terms(path, drift, sigma, table);
    return GirsanovWeight{s_term - h_term};
}

}  // namespace roughsde
