#pragma once

#include <cstdint>
#include <vector>

#include "roughsde/coefficients.hpp"

namespace roughsde {

// Uniform grid on [0,1] with n steps and projection kappa(t) = floor(n t)/n.
struct GridScheme {
    int n = 1;

    double step_size() const { return 1.0 / static_cast<double>(n); }
    double kappa(double t) const;
};

// Brownian increments of one path at a fixed fine resolution. Regenerating
// with the same (master_seed, path) reproduces the table bit-exactly, and
// coarsening by block sums represents the same Brownian path on a coarser
// grid.
class IncrementTable {
  public:
    IncrementTable() = default;
    IncrementTable(int fine_n, int dimension, std::uint64_t master_seed,
                   std::uint64_t path, std::vector<double> increments);

    int fine_n() const { return fine_n_; }
    int dimension() const { return dimension_; }
    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t path() const { return path_; }

    const double* row(int step) const {
        return increments_.data() +
               static_cast<std::size_t>(step) * static_cast<std::size_t>(dimension_);
    }
    double at(int step, int coord) const { return row(step)[coord]; }

    // Sums rows [first, last) into out, left to right. The same order is
    // used by coarsen_increments and the simulators, which is what makes
    // coupled runs bit-identical to runs on pre-coarsened tables.
    void block_sum(int first, int last, Vec& out) const;

  private:
    int fine_n_ = 0;
    int dimension_ = 0;
    std::uint64_t master_seed_ = 0;
    std::uint64_t path_ = 0;
    std::vector<double> increments_;
};

IncrementTable generate_increments(std::uint64_t master_seed, std::uint64_t path,
                                   int fine_n, int dimension);

IncrementTable coarsen_increments(const IncrementTable& table, int coarse_n);

struct SdeProblem {
    VectorField drift;
    MatrixField diffusion;
    Vec start;
};

// Positions at the grid times 0, 1/n, ..., 1 of one Euler path.
struct GridPath {
    int n = 0;
    int dimension = 0;
    std::vector<double> positions;  // (n+1) x dimension, row-major

    Vec at(int step) const;
};

// Scheme state inside step time_index: position at the last grid time plus
// the current off-grid position (equal at grid times).
struct PathState {
    Vec position;
    Vec grid_position;
    int time_index = 0;
};

struct GirsanovWeight {
    double log_weight = 0.0;
    double weight() const;
};

// Euler-Maruyama with coefficients frozen at grid times:
//   X_{k+1} = X_k + b(X_k) h + sigma(X_k) dW_k,  h = 1/n,
// where dW_k aggregates the table's fine increments inside step k. Throws
// std::runtime_error if the state leaves the finite range (bounded
// coefficients make that a bug, not a modelling outcome).
Vec simulate_em(const SdeProblem& problem, const GridScheme& scheme,
                const IncrementTable& table);

GridPath simulate_em_path(const SdeProblem& problem, const GridScheme& scheme,
                          const IncrementTable& table);

// Same stepping with the drift removed.
Vec simulate_driftless(const MatrixField& sigma, const Vec& start,
                       const GridScheme& scheme, const IncrementTable& table);

// Exact scheme value at an intra-step time r: grid position advanced by the
// frozen coefficients over delta = r - kappa(r), using the fine Brownian
// path for W_r - W_kappa. r must lie in the state's current step and on the
// fine grid.
Vec sub_step_position(const VectorField& drift, const MatrixField& sigma,
                      const GridScheme& scheme, const PathState& state, double r,
                      const IncrementTable& table);

// log rho = -sum_k <(sigma^-1 b)(X_k), dW_k> - 1/2 sum_k |(sigma^-1 b)(X_k)|^2 h
// along a grid path, with dW_k aggregated from the table.
GirsanovWeight girsanov_weight(const GridPath& path, const VectorField& drift,
                               const MatrixField& sigma, const IncrementTable& table);

// Importance weight that reweights a driftless ensemble onto the drifted
// law: log w = +sum_k <(sigma^-1 b)(X_k), dW_k> - 1/2 sum_k |...|^2 h along
// the driftless path.
GirsanovWeight girsanov_importance_weight(const GridPath& path, const VectorField& drift,
                                          const MatrixField& sigma,
                                          const IncrementTable& table);

}  // namespace roughsde
