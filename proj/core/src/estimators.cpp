#include "roughsde/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "roughsde/parallel.hpp"
#include "roughsde/rng.hpp"

namespace roughsde {

namespace {

constexpr std::int64_t kBlockSize = 4096;
constexpr int kBootstrapResamples = 1000;
// Offset mixed into the master seed so bootstrap indices never collide with
// path draws.
constexpr std::uint64_t kBootstrapStream = 0x626f6f74ULL;

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

CIEstimate to_estimate(const MeanAccumulator& acc) {
    return CIEstimate{acc.mean(), acc.stderr_of_mean(), acc.count, {}};
}

double bootstrap_root_stderr(const std::vector<double>& powered, int p,
                             std::uint64_t master_seed) {
    if (powered.size() < 2) return 0.0;
    const auto count = powered.size();
    MeanAccumulator roots;
    for (int b = 0; b < kBootstrapResamples; ++b) {
        double sum = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            const double u = uniform_open01(master_seed ^ kBootstrapStream,
                                            static_cast<std::uint64_t>(b), i);
            auto idx = static_cast<std::size_t>(u * static_cast<double>(count));
            idx = std::min(idx, count - 1);
            sum += powered[idx];
        }
        roots.add(std::pow(sum / static_cast<double>(count), 1.0 / p));
    }
    return std::sqrt(roots.variance());
}

}  // namespace

LogLogFit fit_loglog(const std::vector<LogLogObservation>& observations) {
    require(observations.size() >= 3, "fit_loglog: need at least 3 points");
    LogLogFit fit;
    fit.points.reserve(observations.size());

    std::vector<double> lx, ly, se_log;
    for (const auto& obs : observations) {
        require(obs.x > 0.0, "fit_loglog: abscissas must be positive");
        require(obs.y_stderr >= 0.0, "fit_loglog: negative stderr");
        const bool excluded = !(obs.y > 3.0 * obs.y_stderr) || !(obs.y > 0.0);
        fit.points.push_back(LogLogPoint{obs.x, obs.y, obs.y_stderr, excluded});
        if (excluded) continue;
        lx.push_back(std::log(obs.x));
        ly.push_back(std::log(obs.y));
        se_log.push_back(obs.y_stderr / obs.y);
    }
    const auto kept = lx.size();
    if (kept < 3)
        throw std::runtime_error(
            "fit_loglog: fewer than 3 points above the noise floor (" +
            std::to_string(kept) + " kept)");
    fit.used_points = static_cast<int>(kept);

    const bool deterministic =
        std::all_of(se_log.begin(), se_log.end(), [](double s) { return s == 0.0; });
    std::vector<double> w(kept, 1.0);
    if (!deterministic)
        for (std::size_t i = 0; i < kept; ++i)
            w[i] = 1.0 / (std::max(se_log[i], 1e-12) * std::max(se_log[i], 1e-12));

    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < kept; ++i) {
        sw += w[i];
        sx += w[i] * lx[i];
        sy += w[i] * ly[i];
    }
    const double xb = sx / sw;
    const double yb = sy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < kept; ++i) {
        sxx += w[i] * (lx[i] - xb) * (lx[i] - xb);
        sxy += w[i] * (lx[i] - xb) * (ly[i] - yb);
    }
    require(sxx > 0.0, "fit_loglog: degenerate abscissas");
    fit.slope = sxy / sxx;
    fit.intercept = yb - fit.slope * xb;

    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < kept; ++i) {
        const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
        ss_res += w[i] * r * r;
        ss_tot += w[i] * (ly[i] - yb) * (ly[i] - yb);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;

    if (deterministic) {
        const double resid_var = ss_res / static_cast<double>(kept - 2);
        fit.slope_stderr = std::sqrt(resid_var / sxx);
    } else {
        // Inflate by reduced chi^2 when the power law misfits beyond the
        // per-point noise, so the stderr stays honest on curved data.
        const double chi2_red = ss_res / static_cast<double>(kept - 2);
        fit.slope_stderr = std::sqrt(std::max(1.0, chi2_red) / sxx);
    }
    fit.slope_stderr = std::max(fit.slope_stderr, 1e-15);
    return fit;
}

RateFit fit_rate(const std::vector<RateObservation>& observations) {
    std::vector<LogLogObservation> obs;
    obs.reserve(observations.size());
    for (const auto& o : observations) {
        require(o.n >= 1, "fit_rate: resolutions must be positive");
        obs.push_back(LogLogObservation{static_cast<double>(o.n), o.error, o.error_stderr});
    }
    const LogLogFit core = fit_loglog(obs);

    RateFit fit;
    fit.exponent = -core.slope;
    fit.exponent_stderr = core.slope_stderr;
    fit.intercept = core.intercept;
    fit.r_squared = core.r_squared;
    fit.used_points = core.used_points;
    fit.points.reserve(core.points.size());
    for (std::size_t i = 0; i < core.points.size(); ++i)
        fit.points.push_back(RatePoint{observations[i].n, core.points[i].y,
                                       core.points[i].y_stderr, core.points[i].excluded});
    return fit;
}

CoupledEnsemble run_coupled_ensemble(const SdeProblem& problem, const ScalarField& g,
                                     std::span<const int> ns, int fine_n,
                                     std::int64_t paths, std::uint64_t master_seed,
                                     int threads, bool store_terminals) {
    require(!ns.empty(), "run_coupled_ensemble: no resolutions");
    require(paths >= 1, "run_coupled_ensemble: need paths");
    for (int n : ns)
        require(n >= 1 && fine_n % n == 0,
                "run_coupled_ensemble: fine_n must be a multiple of every n");
    const int levels = static_cast<int>(ns.size());
    const int d = static_cast<int>(problem.start.size());
    require(g.dimension == d, "run_coupled_ensemble: payoff dimension mismatch");

    struct Block {
        MeanAccumulator fine;
        std::vector<MeanAccumulator> diff, lvl;
    };
    const int blocks = block_count(paths, kBlockSize);
    std::vector<Block> acc(static_cast<std::size_t>(blocks));

    CoupledEnsemble out;
    out.fine_n = fine_n;
    out.paths = paths;
    if (store_terminals) {
        out.terminals.assign(static_cast<std::size_t>(levels),
                             std::vector<double>(static_cast<std::size_t>(paths)));
        out.fine_terminals.resize(static_cast<std::size_t>(paths));
    }

    run_path_blocks(paths, kBlockSize, threads, [&](int bi, std::int64_t first,
                                                    std::int64_t last) {
        Block blk;
        blk.diff.resize(static_cast<std::size_t>(levels));
        blk.lvl.resize(static_cast<std::size_t>(levels));
        const GridScheme fine_scheme{fine_n};
        for (std::int64_t path = first; path < last; ++path) {
            const IncrementTable table = generate_increments(
                master_seed, static_cast<std::uint64_t>(path), fine_n, d);
            const Vec xf = simulate_em(problem, fine_scheme, table);
            const double gf = g.evaluate(xf);
            blk.fine.add(gf);
            if (store_terminals)
                out.fine_terminals[static_cast<std::size_t>(path)] = xf[0];
            for (int li = 0; li < levels; ++li) {
                const Vec xn = simulate_em(problem, GridScheme{ns[li]}, table);
                const double gn = g.evaluate(xn);
                blk.diff[static_cast<std::size_t>(li)].add(gf - gn);
                blk.lvl[static_cast<std::size_t>(li)].add(gn);
                if (store_terminals)
                    out.terminals[static_cast<std::size_t>(li)]
                                 [static_cast<std::size_t>(path)] = xn[0];
            }
        }
        acc[static_cast<std::size_t>(bi)] = std::move(blk);
    });

    MeanAccumulator fine;
    std::vector<MeanAccumulator> diff(static_cast<std::size_t>(levels)),
        lvl(static_cast<std::size_t>(levels));
    for (const auto& blk : acc) {
        fine.merge(blk.fine);
        for (int li = 0; li < levels; ++li) {
            diff[static_cast<std::size_t>(li)].merge(blk.diff[static_cast<std::size_t>(li)]);
            lvl[static_cast<std::size_t>(li)].merge(blk.lvl[static_cast<std::size_t>(li)]);
        }
    }
    out.fine_mean = to_estimate(fine);
    out.levels.resize(static_cast<std::size_t>(levels));
    for (int li = 0; li < levels; ++li) {
        out.levels[static_cast<std::size_t>(li)] =
            CoupledLevel{ns[li], to_estimate(diff[static_cast<std::size_t>(li)]),
                         to_estimate(lvl[static_cast<std::size_t>(li)])};
    }
    return out;
}

CIEstimate weak_error(const SdeProblem& problem, const ScalarField& g, int n,
                      double reference, double reference_error, std::int64_t paths,
                      std::uint64_t master_seed, bool coupled, int fine_n,
                      int threads) {
    require(paths >= 1000, "weak_error: need at least 10^3 paths");
    CIEstimate est;
    if (coupled) {
        const int levels[] = {n};
        CoupledEnsemble ens = run_coupled_ensemble(problem, g, levels, fine_n, paths,
                                                   master_seed, threads, false);
        est = ens.levels.front().diff;
    } else {
        const int d = static_cast<int>(problem.start.size());
        const int blocks = block_count(paths, kBlockSize);
        std::vector<MeanAccumulator> acc(static_cast<std::size_t>(blocks));
        run_path_blocks(paths, kBlockSize, threads,
                        [&](int bi, std::int64_t first, std::int64_t last) {
                            MeanAccumulator local;
                            const GridScheme scheme{n};
                            for (std::int64_t path = first; path < last; ++path) {
                                const IncrementTable table = generate_increments(
                                    master_seed, static_cast<std::uint64_t>(path), n, d);
                                local.add(g.evaluate(simulate_em(problem, scheme, table)));
                            }
                            acc[static_cast<std::size_t>(bi)] = local;
                        });
        MeanAccumulator total;
        for (const auto& a : acc) total.merge(a);
        est = to_estimate(total);
        est.mean = reference - est.mean;
    }
    if (reference_error > 0.0 && reference_error > est.stderr_)
        est.warning = "reference error estimate " + std::to_string(reference_error) +
                      " exceeds the MC stderr " + std::to_string(est.stderr_);
    return est;
}

double wasserstein_1d(std::span<const double> sorted_a, std::span<const double> sorted_b) {
    require(sorted_a.size() == sorted_b.size(), "wasserstein_1d: unequal sample counts");
    require(!sorted_a.empty(), "wasserstein_1d: empty samples");
    require(std::is_sorted(sorted_a.begin(), sorted_a.end()) &&
                std::is_sorted(sorted_b.begin(), sorted_b.end()),
            "wasserstein_1d: inputs must be sorted");
    double sum = 0.0;
    for (std::size_t i = 0; i < sorted_a.size(); ++i)
        sum += std::abs(sorted_a[i] - sorted_b[i]);
    return sum / static_cast<double>(sorted_a.size());
}

namespace {

// Shared sub-step integration loop for the two quadrature functionals.
// Integrand(state_value, sub_value, r, x_r) returns one sub-step contribution
// or signals hull exit.
template <typename Integrand>
QuadratureResult quadrature_impl(const SdeProblem& problem, const PdeSolution& pde,
                                 int n, std::int64_t paths, std::uint64_t master_seed,
                                 int sub_steps, int threads, bool root_moment, int p,
                                 Integrand&& integrand) {
    require(n >= 1, "quadrature: n must be positive");
    require(sub_steps >= 8, "quadrature: need at least 8 sub-steps");
    require(paths >= 1, "quadrature: need paths");
    const int d = static_cast<int>(problem.start.size());
    require(d == 1, "quadrature: the PDE-backed functionals are 1D");
    const int fine_n = n * sub_steps;
    const double dr = 1.0 / static_cast<double>(fine_n);

    struct Block {
        MeanAccumulator acc;
        std::vector<double> powered;
        std::int64_t excluded = 0;
    };
    const int blocks = block_count(paths, kBlockSize);
    std::vector<Block> result(static_cast<std::size_t>(blocks));

    run_path_blocks(paths, kBlockSize, threads, [&](int bi, std::int64_t first,
                                                    std::int64_t last) {
        Block blk;
        const GridScheme scheme{n};
        const double h = scheme.step_size();
        Vec xk(1), bx(1), xr(1), dw(1);
        Mat sx(1, 1);
        for (std::int64_t path = first; path < last; ++path) {
            const IncrementTable table = generate_increments(
                master_seed, static_cast<std::uint64_t>(path), fine_n, d);
            const GridPath grid = simulate_em_path(problem, scheme, table);
            double integral = 0.0;
            bool excluded = false;
            for (int k = 0; k < n && !excluded; ++k) {
                xk[0] = grid.positions[static_cast<std::size_t>(k)];
                problem.drift.evaluate(xk, bx);
                problem.diffusion.evaluate(xk, sx);
                // s = 0 contributes nothing: X_r = X_k there.
                for (int s = 1; s < sub_steps; ++s) {
                    const double r = (static_cast<double>(k) * sub_steps + s) * dr;
                    const double delta = static_cast<double>(s) * h /
                                         static_cast<double>(sub_steps);
                    table.block_sum(k * sub_steps, k * sub_steps + s, dw);
                    const double x_r = xk[0] + bx[0] * delta + sx(0, 0) * dw[0];
                    if (!pde.in_hull(r, x_r)) {
                        excluded = true;
                        break;
                    }
                    integral += integrand(xk[0], x_r, r) * dr;
                }
            }
            if (excluded) {
                ++blk.excluded;
                continue;
            }
            if (root_moment) {
                const double powered = std::pow(std::abs(integral), p);
                blk.acc.add(powered);
                blk.powered.push_back(powered);
            } else {
                blk.acc.add(integral);
            }
        }
        result[static_cast<std::size_t>(bi)] = std::move(blk);
    });

    MeanAccumulator total;
    std::vector<double> powered;
    std::int64_t excluded = 0;
    for (auto& blk : result) {
        total.merge(blk.acc);
        excluded += blk.excluded;
        if (root_moment)
            powered.insert(powered.end(), blk.powered.begin(), blk.powered.end());
    }

    QuadratureResult out;
    out.excluded = excluded;
    out.exclusion_fraction =
        static_cast<double>(excluded) / static_cast<double>(paths);
    if (root_moment) {
        out.estimate.mean = std::pow(total.mean(), 1.0 / p);
        out.estimate.stderr_ = bootstrap_root_stderr(powered, p, master_seed);
    } else {
        out.estimate.mean = std::abs(total.mean());
        out.estimate.stderr_ = total.stderr_of_mean();
    }
    out.estimate.paths = total.count;
    if (out.exclusion_fraction >= 1e-3)
        out.estimate.warning = "hull exclusion fraction " +
                               std::to_string(out.exclusion_fraction) +
                               " exceeds 1e-3";
    return out;
}

}  // namespace

QuadratureResult drift_quadrature(const SdeProblem& problem, const PdeSolution& pde,
                                  int n, int coordinate, int p, std::int64_t paths,
                                  std::uint64_t master_seed, int sub_steps,
                                  int threads) {
    require(coordinate == 0, "drift_quadrature: 1D functional, coordinate must be 0");
    require(p >= 1, "drift_quadrature: p must be >= 1");
    return quadrature_impl(
        problem, pde, n, paths, master_seed, sub_steps, threads, true, p,
        [&](double xk, double xr, double r) {
            Vec arg(1), b_at_k(1), b_at_r(1);
            arg[0] = xk;
            problem.drift.evaluate(arg, b_at_k);
            arg[0] = xr;
            problem.drift.evaluate(arg, b_at_r);
            return (b_at_r[0] - b_at_k[0]) * pde.eval_du(r, xr);
        });
}

QuadratureResult diffusion_quadrature(const SdeProblem& problem, const PdeSolution& pde,
                                      int n, int ci, int cj, std::int64_t paths,
                                      std::uint64_t master_seed, int sub_steps,
                                      int threads) {
    require(ci == 0 && cj == 0, "diffusion_quadrature: 1D functional, indices must be 0");
    return quadrature_impl(
        problem, pde, n, paths, master_seed, sub_steps, threads, false, 1,
        [&](double xk, double xr, double r) {
            Vec arg(1);
            Mat s_at(1, 1);
            arg[0] = xk;
            problem.diffusion.evaluate(arg, s_at);
            const double h_k = s_at(0, 0) * s_at(0, 0);
            arg[0] = xr;
            problem.diffusion.evaluate(arg, s_at);
            const double h_r = s_at(0, 0) * s_at(0, 0);
            return (h_r - h_k) * pde.eval_d2u(r, xr);
        });
}

std::vector<SmoothingPoint> smoothing_probe(const MatrixField& sigma,
                                            const C1TestFunction& test, const Vec& start,
                                            int n, std::span<const double> times,
                                            std::int64_t paths, std::uint64_t master_seed,
                                            int threads) {
    require(!times.empty(), "smoothing_probe: no times requested");
    require(n >= 1, "smoothing_probe: n must be positive");
    const int d = static_cast<int>(start.size());
    std::vector<int> indices;
    indices.reserve(times.size());
    for (double t : times) {
        const double pos = t * static_cast<double>(n);
        const int k = static_cast<int>(std::llround(pos));
        require(std::abs(pos - k) < 1e-9 && k >= 1 && k <= n,
                "smoothing_probe: times must lie on the grid 1/n..1");
        indices.push_back(k);
    }

    SdeProblem driftless{make_zero_drift(d), sigma, start};
    const int blocks = block_count(paths, kBlockSize);
    std::vector<std::vector<MeanAccumulator>> acc(
        static_cast<std::size_t>(blocks),
        std::vector<MeanAccumulator>(times.size()));

    run_path_blocks(paths, kBlockSize, threads, [&](int bi, std::int64_t first,
                                                    std::int64_t last) {
        auto& local = acc[static_cast<std::size_t>(bi)];
        const GridScheme scheme{n};
        for (std::int64_t path = first; path < last; ++path) {
            const IncrementTable table = generate_increments(
                master_seed, static_cast<std::uint64_t>(path), n, d);
            const GridPath grid = simulate_em_path(driftless, scheme, table);
            for (std::size_t ti = 0; ti < indices.size(); ++ti)
                local[ti].add(test.derivative.evaluate(
                    grid.at(indices[ti])));
        }
    });

    std::vector<SmoothingPoint> out(times.size());
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
        MeanAccumulator total;
        for (const auto& blk : acc) total.merge(blk[ti]);
        out[ti] = SmoothingPoint{times[ti], total.mean(), total.stderr_of_mean()};
    }
    return out;
}

ReweightedEstimate importance_reweighted_mean(const SdeProblem& problem,
                                              const ScalarField& g, int n,
                                              std::int64_t paths,
                                              std::uint64_t master_seed, int threads) {
    const int d = static_cast<int>(problem.start.size());
    SdeProblem driftless{make_zero_drift(d), problem.diffusion, problem.start};

    struct Block {
        MeanAccumulator weighted, weights;
    };
    const int blocks = block_count(paths, kBlockSize);
    std::vector<Block> acc(static_cast<std::size_t>(blocks));

    run_path_blocks(paths, kBlockSize, threads, [&](int bi, std::int64_t first,
                                                    std::int64_t last) {
        Block blk;
        const GridScheme scheme{n};
        for (std::int64_t path = first; path < last; ++path) {
            const IncrementTable table = generate_increments(
                master_seed, static_cast<std::uint64_t>(path), n, d);
            const GridPath grid = simulate_em_path(driftless, scheme, table);
            const double w =
                girsanov_importance_weight(grid, problem.drift, problem.diffusion, table)
                    .weight();
            blk.weighted.add(g.evaluate(grid.at(n)) * w);
            blk.weights.add(w);
        }
        acc[static_cast<std::size_t>(bi)] = blk;
    });

    MeanAccumulator weighted, weights;
    for (const auto& blk : acc) {
        weighted.merge(blk.weighted);
        weights.merge(blk.weights);
    }
    return ReweightedEstimate{to_estimate(weighted), to_estimate(weights)};
}

}  // namespace roughsde
