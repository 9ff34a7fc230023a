#include "roughsde/studies.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "roughsde/estimators.hpp"
#include "roughsde/parallel.hpp"
#include "roughsde/pde.hpp"
#include "roughsde/version.hpp"

namespace roughsde {

namespace {

using nlohmann::json;

constexpr double kExponentSlack = 0.15;
constexpr double kSchauderSlack = 0.10;
constexpr double kMaxExclusionFraction = 1e-3;
constexpr double kTargetDx = 0.02;
constexpr int kMaxSpacePoints = (1 << 14) + 1;
constexpr int kQuadratureTimePoints = 169;

std::string hex_hash(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool below_noise_floor(double value, double stderr_) {
    return !(value > 3.0 * stderr_) || !(value > 0.0);
}

struct CsvRow {
    std::string series;
    double x = 0.0;
    double value = 0.0;
    double stderr_ = 0.0;
    bool excluded = false;
};

std::string to_csv(const std::vector<CsvRow>& rows) {
    std::string out = "series,x,value,stderr,excluded\n";
    for (const auto& r : rows) {
        out += r.series;
        out += ',';
        out += fmt(r.x);
        out += ',';
        out += fmt(r.value);
        out += ',';
        out += fmt(r.stderr_);
        out += ',';
        out += r.excluded ? '1' : '0';
        out += '\n';
    }
    return out;
}

json base_summary(const ExperimentConfig& config, const std::string& study) {
    json j;
    j["artifact"] = kVersion;
    j["study"] = study;
    j["config"] = json::parse(serialize_config(config));
    j["config_hash"] = hex_hash(config_hash(config));
    j["master_seed"] = config.master_seed;
    j["errors"] = json::array();
    return j;
}

json fit_to_json(const LogLogFit& fit) {
    json j;
    j["slope"] = fit.slope;
    j["slope_stderr"] = fit.slope_stderr;
    j["exponent"] = -fit.slope;
    j["exponent_stderr"] = fit.slope_stderr;
    j["intercept"] = fit.intercept;
    j["r_squared"] = fit.r_squared;
    j["used_points"] = fit.used_points;
    return j;
}

json rate_fit_to_json(const RateFit& fit) {
    json j;
    j["slope"] = -fit.exponent;
    j["slope_stderr"] = fit.exponent_stderr;
    j["exponent"] = fit.exponent;
    j["exponent_stderr"] = fit.exponent_stderr;
    j["intercept"] = fit.intercept;
    j["r_squared"] = fit.r_squared;
    j["used_points"] = fit.used_points;
    return j;
}

constexpr const char* kPlotScript = R"PY(#!/usr/bin/env python3
"""Log-log plot of this study's points with the fitted power laws.

Reads points.csv and summary.json from its own directory, writes plot.pdf.
Requires matplotlib.
"""
import csv
import json
import math
import os

HERE = os.path.dirname(os.path.abspath(__file__))


def main():
    with open(os.path.join(HERE, "summary.json")) as fh:
        summary = json.load(fh)
    with open(os.path.join(HERE, "points.csv")) as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise SystemExit("points.csv is empty")

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    groups = {}
    for row in rows:
        groups.setdefault(row["series"], []).append(row)

    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for label, pts in sorted(groups.items()):
        xs = [float(p["x"]) for p in pts]
        ys = [float(p["value"]) for p in pts]
        es = [float(p["stderr"]) for p in pts]
        ax.errorbar(xs, ys, yerr=es, fmt="o", ms=4, capsize=2, label=label)
        fit = summary.get("fits", {}).get(label)
        if fit and "slope" in fit:
            lo, hi = min(xs), max(xs)
            grid = [lo * (hi / lo) ** (i / 63.0) for i in range(64)]
            line = [math.exp(fit["intercept"]) * g ** fit["slope"] for g in grid]
            ax.plot(grid, line, "--", lw=1,
                    label="%s fit: slope %.3f" % (label, fit["slope"]))
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(summary.get("abscissa", "x"))
    ax.set_ylabel("value")
    ax.set_title(summary.get("study", ""))
    ax.legend(fontsize=8)
    fig.tight_layout()
    out = os.path.join(HERE, "plot.pdf")
    fig.savefig(out)
    print("wrote", out)


if __name__ == "__main__":
    main()
)PY";

void finalize(StudyOutput& out, json& summary, const std::vector<CsvRow>& rows) {
    summary["exit_code"] = out.exit_code;
    out.summary = summary.dump(2) + "\n";
    out.files["summary.json"] = out.summary;
    out.files["points.csv"] = to_csv(rows);
    out.files["plot.py"] = kPlotScript;
}

double theoretical_rate(const SdeProblem& problem) {
    return 0.5 * (1.0 + problem.drift.regularity.alpha);
}

int space_points_for(double x_lo, double x_hi) {
    const int m = 1 + static_cast<int>(std::ceil((x_hi - x_lo) / kTargetDx));
    return std::min(std::max(m | 1, 129), kMaxSpacePoints);
}

}  // namespace

StudyOutput run_rate_study(const ExperimentConfig& config, int threads) {
    config.validate();
    const SdeProblem problem = make_problem(config);
    const ScalarField g = make_terminal(config.terminal, config.dimension);
    const bool coupled = config.estimator == "coupled";

    StudyOutput out;
    json summary = base_summary(config, "rate-study");
    summary["abscissa"] = "n";
    summary["estimator"] = config.estimator;

    const CoupledEnsemble ens =
        run_coupled_ensemble(problem, g, config.scheme_ns, config.fine_n(),
                             config.paths, config.master_seed, threads, false);
    summary["fine"] = {{"n", ens.fine_n},
                       {"mean", ens.fine_mean.mean},
                       {"stderr", ens.fine_mean.stderr_}};

    double reference = ens.fine_mean.mean;
    double reference_error = ens.fine_mean.stderr_;
    json ref_json;
    ref_json["policy"] = config.reference;
    if (config.reference == "pde") {
        const FeynmanKacResult fk =
            feynman_kac_reference(problem, g, config.reference_accuracy);
        reference = fk.value;
        reference_error = fk.error_estimate;
        ref_json["value"] = fk.value;
        ref_json["error_estimate"] = fk.error_estimate;
        ref_json["refinements"] = fk.refinements;
        const double gap = std::abs(ens.fine_mean.mean - fk.value);
        const double scale = std::hypot(ens.fine_mean.stderr_, fk.error_estimate);
        const double gap_sigmas = scale > 0.0 ? gap / scale : 0.0;
        ref_json["fine_gap_sigmas"] = gap_sigmas;
        if (gap_sigmas > 4.0)
            summary["errors"].push_back(
                "pde reference and fine ensemble disagree by " + fmt(gap_sigmas) +
                " sigma");
        if (!coupled) {
            double min_se = std::numeric_limits<double>::infinity();
            for (const auto& lvl : ens.levels)
                min_se = std::min(min_se, lvl.level_mean.stderr_);
            const bool sufficient =
                min_se == 0.0 || reference_error <= 0.5 * min_se;
            ref_json["sufficient"] = sufficient;
            if (!sufficient) {
                summary["errors"].push_back(
                    "reference precision insufficient: error estimate " +
                    fmt(reference_error) + " exceeds half the smallest MC stderr " +
                    fmt(min_se));
                out.exit_code = 2;
            }
        }
    } else {
        ref_json["value"] = reference;
        ref_json["error_estimate"] = reference_error;
    }
    summary["reference"] = ref_json;

    std::vector<RateObservation> obs;
    std::vector<CsvRow> rows;
    json points = json::array();
    for (const auto& lvl : ens.levels) {
        double error = 0.0, se = 0.0;
        if (coupled) {
            error = std::abs(lvl.diff.mean);
            se = lvl.diff.stderr_;
        } else {
            error = std::abs(reference - lvl.level_mean.mean);
            se = lvl.level_mean.stderr_;
        }
        obs.push_back({lvl.n, error, se});
        const bool floored = below_noise_floor(error, se);
        rows.push_back({"weak_error", static_cast<double>(lvl.n), error, se, floored});
        points.push_back({{"n", lvl.n},
                          {"error", error},
                          {"stderr", se},
                          {"level_mean", lvl.level_mean.mean},
                          {"level_stderr", lvl.level_mean.stderr_},
                          {"excluded_from_fit", floored}});
    }
    summary["points"] = points;

    const double theoretical = theoretical_rate(problem);
    summary["theoretical_exponent"] = theoretical;
    summary["slack"] = kExponentSlack;

    json fits;
    bool pass = false;
    try {
        const RateFit fit = fit_rate(obs);
        fits["weak_error"] = rate_fit_to_json(fit);
        pass = std::abs(fit.exponent - theoretical) <= kExponentSlack;
        if (!pass && out.exit_code == 0) out.exit_code = 3;
    } catch (const std::exception& e) {
        fits["weak_error"] = {{"error", e.what()}};
        summary["errors"].push_back(e.what());
        out.exit_code = 2;
    }
    summary["fits"] = fits;
    summary["pass"] = pass && out.exit_code == 0;

    finalize(out, summary, rows);
    return out;
}

StudyOutput run_wasserstein_study(const ExperimentConfig& config, int threads) {
    config.validate();
    if (config.dimension != 1)
        throw std::invalid_argument("wasserstein-study: only d = 1 is supported");
    const SdeProblem problem = make_problem(config);
    const ScalarField g = make_terminal(config.terminal, config.dimension);

    StudyOutput out;
    json summary = base_summary(config, "wasserstein-study");
    summary["abscissa"] = "n";
    summary["note"] =
        "W1 is computed on the coupled pair (shared increments), which "
        "upper-bounds the distributional W1; the fitted decay bounds the "
        "distributional rate from above";

    const CoupledEnsemble ens =
        run_coupled_ensemble(problem, g, config.scheme_ns, config.fine_n(),
                             config.paths, config.master_seed, threads, true);

    std::vector<double> fine_sorted = ens.fine_terminals;
    std::sort(fine_sorted.begin(), fine_sorted.end());

    const std::int64_t paths = config.paths;
    const int batches = paths >= 256 ? 32 : std::max<int>(2, static_cast<int>(paths / 8));

    std::vector<RateObservation> obs;
    std::vector<CsvRow> rows;
    json points = json::array();
    for (std::size_t li = 0; li < ens.levels.size(); ++li) {
        std::vector<double> level_sorted = ens.terminals[li];
        std::sort(level_sorted.begin(), level_sorted.end());
        const double w1 = wasserstein_1d(level_sorted, fine_sorted);

        MeanAccumulator batch_w1;
        for (int b = 0; b < batches; ++b) {
            const std::int64_t first = paths * b / batches;
            const std::int64_t last = paths * (b + 1) / batches;
            std::vector<double> la(ens.terminals[li].begin() + first,
                                   ens.terminals[li].begin() + last);
            std::vector<double> fa(ens.fine_terminals.begin() + first,
                                   ens.fine_terminals.begin() + last);
            std::sort(la.begin(), la.end());
            std::sort(fa.begin(), fa.end());
            batch_w1.add(wasserstein_1d(la, fa));
        }
        const double se = batch_w1.stderr_of_mean();

        const int n = ens.levels[li].n;
        obs.push_back({n, w1, se});
        const bool floored = below_noise_floor(w1, se);
        rows.push_back({"w1", static_cast<double>(n), w1, se, floored});
        points.push_back({{"n", n},
                          {"w1", w1},
                          {"stderr", se},
                          {"batches", batches},
                          {"excluded_from_fit", floored}});
    }
    summary["points"] = points;

    const double theoretical = theoretical_rate(problem);
    summary["theoretical_exponent"] = theoretical;
    summary["slack"] = kExponentSlack;

    json fits;
    bool pass = false;
    try {
        const RateFit fit = fit_rate(obs);
        fits["w1"] = rate_fit_to_json(fit);
        pass = std::abs(fit.exponent - theoretical) <= kExponentSlack;
        if (!pass) out.exit_code = 3;
    } catch (const std::exception& e) {
        fits["w1"] = {{"error", e.what()}};
        summary["errors"].push_back(e.what());
        out.exit_code = 2;
    }
    summary["fits"] = fits;
    summary["pass"] = pass && out.exit_code == 0;

    finalize(out, summary, rows);
    return out;
}

StudyOutput run_quadrature_study(const ExperimentConfig& config, int threads) {
    config.validate();
    if (config.dimension != 1)
        throw std::invalid_argument("quadrature-study: only d = 1 is supported");
    const SdeProblem problem = make_problem(config);
    const ScalarField g = make_terminal(config.terminal, config.dimension);

    StudyOutput out;
    json summary = base_summary(config, "quadrature-study");
    summary["abscissa"] = "n";

    const double halfwidth = suggest_domain_halfwidth(problem);
    const double x_lo = config.x0 - halfwidth;
    const double x_hi = config.x0 + halfwidth;
    const int m_x = space_points_for(x_lo, x_hi);
    const PdeSolution pde = solve_backward_kolmogorov(problem, g, x_lo, x_hi, m_x,
                                                      kQuadratureTimePoints);
    summary["pde"] = {{"x_lo", x_lo},
                      {"x_hi", x_hi},
                      {"m_x", m_x},
                      {"m_t", kQuadratureTimePoints},
                      {"warnings", pde.warnings()}};

    struct Series {
        std::string name;
        std::vector<RateObservation> obs;
        bool all_zero = true;
    };
    Series drift{"drift", {}, true};
    Series diffusion{"diffusion", {}, true};

    std::vector<CsvRow> rows;
    json points = json::array();
    for (int n : config.scheme_ns) {
        const QuadratureResult dq =
            drift_quadrature(problem, pde, n, 0, config.moment_p, config.paths,
                             config.master_seed, config.sub_steps, threads);
        const QuadratureResult fq =
            diffusion_quadrature(problem, pde, n, 0, 0, config.paths,
                                 config.master_seed, config.sub_steps, threads);
        for (const auto* q : {&dq, &fq}) {
            const bool is_drift = q == &dq;
            Series& series = is_drift ? drift : diffusion;
            const double v = q->estimate.mean;
            const double se = q->estimate.stderr_;
            series.obs.push_back({n, v, se});
            series.all_zero = series.all_zero && v == 0.0 && se == 0.0;
            const bool floored = below_noise_floor(v, se);
            rows.push_back({series.name, static_cast<double>(n), v, se, floored});
            points.push_back({{"series", series.name},
                              {"n", n},
                              {"value", v},
                              {"stderr", se},
                              {"excluded_paths", q->excluded},
                              {"exclusion_fraction", q->exclusion_fraction},
                              {"excluded_from_fit", floored}});
            if (q->exclusion_fraction >= kMaxExclusionFraction) {
                summary["errors"].push_back(
                    series.name + " quadrature at n=" + std::to_string(n) +
                    ": exclusion fraction " + fmt(q->exclusion_fraction) +
                    " breaches the 1e-3 budget");
                out.exit_code = 2;
            }
            if (!q->estimate.warning.empty())
                summary["errors"].push_back(series.name + " at n=" +
                                            std::to_string(n) + ": " +
                                            q->estimate.warning);
        }
    }
    summary["points"] = points;

    const double theoretical = theoretical_rate(problem);
    summary["theoretical_exponent"] = theoretical;
    summary["slack"] = kExponentSlack;
    summary["pass_rule"] = "fitted exponent >= theoretical - slack, per series";

    json fits;
    bool pass = true;
    for (Series* series : {&drift, &diffusion}) {
        if (series->all_zero) {
            fits[series->name] = {{"identically_zero", true}};
            continue;
        }
        try {
            const RateFit fit = fit_rate(series->obs);
            fits[series->name] = rate_fit_to_json(fit);
            if (fit.exponent < theoretical - kExponentSlack) pass = false;
        } catch (const std::exception& e) {
            fits[series->name] = {{"error", e.what()}};
            summary["errors"].push_back(series->name + ": " + e.what());
            out.exit_code = 2;
        }
    }
    if (!pass && out.exit_code == 0) out.exit_code = 3;
    summary["fits"] = fits;
    summary["pass"] = pass && out.exit_code == 0;

    finalize(out, summary, rows);
    return out;
}

StudyOutput run_smoothing_study(const ExperimentConfig& config, int threads) {
    config.validate();
    const MatrixField sigma = make_diffusion(config.diffusion, config.dimension);
    const C1TestFunction probe = make_probe(config.probe, config.dimension);
    const int n = config.scheme_ns.back();

    StudyOutput out;
    json summary = base_summary(config, "smoothing-study");
    summary["abscissa"] = "t";
    summary["probe_norms"] = {{"c0", probe.value.regularity.sup_bound},
                              {"c1", probe.derivative.regularity.sup_bound}};

    double t_lo = config.probe_t_lo;
    double t_hi = config.probe_t_hi;
    if (t_hi <= 0.0) {
        t_lo = 0.0;
        t_hi = 1.0;
    }
    std::vector<double> times;
    for (int k = 1; k <= n; ++k) {
        const double t = static_cast<double>(k) / n;
        if (t + 1e-12 >= t_lo && t <= t_hi + 1e-12) times.push_back(t);
    }
    if (times.size() < 4)
        throw std::invalid_argument(
            "smoothing-study: probe window holds fewer than 4 grid times");
    summary["window"] = {{"t_lo", times.front()}, {"t_hi", times.back()}};
    summary["grid_n"] = n;

    Vec start(config.dimension);
    start.setConstant(config.x0);
    const std::vector<SmoothingPoint> probe_points = smoothing_probe(
        sigma, probe, start, n, times, config.paths, config.master_seed, threads);

    std::vector<LogLogObservation> obs;
    std::vector<CsvRow> rows;
    json points = json::array();
    for (const auto& p : probe_points) {
        const double mag = std::abs(p.mean);
        obs.push_back({p.t, mag, p.stderr_});
        const bool floored = below_noise_floor(mag, p.stderr_);
        rows.push_back({"derivative_mean", p.t, mag, p.stderr_, floored});
        points.push_back({{"t", p.t},
                          {"mean", p.mean},
                          {"abs_mean", mag},
                          {"stderr", p.stderr_},
                          {"excluded_from_fit", floored}});
    }
    summary["points"] = points;

    summary["theoretical_slope"] = -0.5;
    summary["slope_window"] = {-0.6, -0.3};

    json fits;
    bool pass = false;
    try {
        const LogLogFit fit = fit_loglog(obs);
        fits["derivative_mean"] = fit_to_json(fit);
        pass = fit.slope >= -0.6 && fit.slope <= -0.3;
        if (!pass) out.exit_code = 3;
    } catch (const std::exception& e) {
        fits["derivative_mean"] = {{"error", e.what()}};
        summary["errors"].push_back(e.what());
        out.exit_code = 2;
    }
    summary["fits"] = fits;
    summary["pass"] = pass && out.exit_code == 0;

    finalize(out, summary, rows);
    return out;
}

StudyOutput run_pde_check(const ExperimentConfig& config, int threads) {
    (void)threads;  // the tridiagonal march is single-threaded
    config.validate();
    const SdeProblem problem = make_problem(config);
    const ScalarField g = make_terminal(config.terminal, config.dimension);

    StudyOutput out;
    json summary = base_summary(config, "pde-check");
    summary["abscissa"] = "one_minus_t";

    const double halfwidth = suggest_domain_halfwidth(problem);
    const double x_lo = config.x0 - halfwidth;
    const double x_hi = config.x0 + halfwidth;
    const int m_x =
        std::min(kMaxSpacePoints,
                 std::max(2049, space_points_for(x_lo, x_hi)));
    const PdeSolution solution =
        solve_backward_kolmogorov(problem, g, x_lo, x_hi, m_x, 169);
    summary["pde"] = {{"x_lo", x_lo},
                      {"x_hi", x_hi},
                      {"m_x", m_x},
                      {"m_t", 169},
                      {"warnings", solution.warnings()}};

    const SchauderProfile profile =
        schauder_profile(solution, config.schauder_gamma, config.terminal_beta);
    const double expected = 0.5 * (config.schauder_gamma - config.terminal_beta);
    summary["gamma"] = profile.gamma;
    summary["beta"] = profile.beta;
    summary["expected_blowup_exponent"] = expected;
    summary["slack"] = kSchauderSlack;
    const double window_lo = 1e-3;
    const double window_hi = 1e-1;
    summary["fit_window_one_minus_t"] = {window_lo, window_hi};

    std::vector<LogLogObservation> obs;
    std::vector<CsvRow> rows;
    json points = json::array();
    for (const auto& p : profile.points) {
        const double omt = 1.0 - p.t;
        points.push_back({{"t", p.t},
                          {"one_minus_t", omt},
                          {"c_norm", p.c_norm},
                          {"top_seminorm", p.top_seminorm}});
        if (omt <= 0.0) continue;
        rows.push_back({"c_norm", omt, p.c_norm, 0.0, false});
        const bool in_window = omt >= window_lo && omt <= window_hi;
        rows.push_back({"top_seminorm", omt, p.top_seminorm, 0.0, !in_window});
        if (in_window) obs.push_back({omt, p.top_seminorm, 0.0});
    }
    summary["points"] = points;

    json fits;
    bool pass = false;
    try {
        const LogLogFit fit = fit_loglog(obs);
        json fj = fit_to_json(fit);
        // Blowup exponent: top_seminorm ~ (1-t)^{-e}, so e = -slope.
        fj["blowup_exponent"] = -fit.slope;
        fits["top_seminorm"] = fj;
        pass = std::abs(-fit.slope - expected) <= kSchauderSlack;
        if (!pass) out.exit_code = 3;
    } catch (const std::exception& e) {
        fits["top_seminorm"] = {{"error", e.what()}};
        summary["errors"].push_back(e.what());
        out.exit_code = 2;
    }
    summary["fits"] = fits;
    summary["pass"] = pass && out.exit_code == 0;

    finalize(out, summary, rows);
    return out;
}

void write_study_outputs(const StudyOutput& output, const std::string& out_dir,
                         double elapsed_seconds, int threads) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    for (const auto& [name, bytes] : output.files) {
        std::ofstream file(fs::path(out_dir) / name, std::ios::binary);
        if (!file) throw std::runtime_error("cannot write " + name + " in " + out_dir);
        file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }

    std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);

    json meta;
    meta["written_utc"] = stamp;
    meta["elapsed_seconds"] = elapsed_seconds;
    meta["threads"] = threads;
    std::ofstream file(fs::path(out_dir) / "meta.json", std::ios::binary);
    if (!file) throw std::runtime_error("cannot write meta.json in " + out_dir);
    const std::string bytes = meta.dump(2) + "\n";
    file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace roughsde
