#include "roughsde/pde.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace roughsde {

namespace {

constexpr int kDyadicLevels = 20;  // terminal layer thickness 2^-20

struct TimeGrid {
    std::vector<double> tau;  // ascending, tau = 1 - t, tau[0] = 0
    int startup_steps = 0;    // implicit steps damping the terminal layer
};

// Dyadic refinement toward tau = 0: segments [0, 2^-K], [2^-K, 2^-K+1], ...,
// [1/2, 1], each cut into sub_steps uniform pieces.
TimeGrid build_time_grid(int m_t) {
    const int segments = kDyadicLevels + 1;
    const int sub_steps = std::max(1, (m_t - 1 + segments / 2) / segments);
    TimeGrid grid;
    grid.tau.push_back(0.0);
    double lo = 0.0;
    for (int k = kDyadicLevels; k >= 0; --k) {
        const double hi = std::ldexp(1.0, -k);
        for (int s = 1; s <= sub_steps; ++s)
            grid.tau.push_back(lo + (hi - lo) * s / sub_steps);
        lo = hi;
    }
    grid.tau.back() = 1.0;
    grid.startup_steps = sub_steps;
    return grid;
}

void thomas_solve(const std::vector<double>& lo, const std::vector<double>& di,
                  const std::vector<double>& up, std::vector<double>& rhs,
                  std::vector<double>& scratch) {
    const std::size_t m = di.size();
    scratch.resize(m);
    double piv = di[0];
    if (piv == 0.0) throw std::runtime_error("tridiagonal pivot breakdown");
    scratch[0] = up[0] / piv;
    rhs[0] /= piv;
    for (std::size_t i = 1; i < m; ++i) {
        piv = di[i] - lo[i] * scratch[i - 1];
        if (piv == 0.0) throw std::runtime_error("tridiagonal pivot breakdown");
        scratch[i] = up[i] / piv;
        rhs[i] = (rhs[i] - lo[i] * rhs[i - 1]) / piv;
    }
    for (std::size_t i = m - 1; i-- > 0;) rhs[i] -= scratch[i] * rhs[i + 1];
}

struct MarchResult {
    std::vector<double> rows;  // recorded ? (m_t x m_x) : final row only
    std::vector<double> tau;
    double dx = 0.0;
    std::vector<double> space;
};

MarchResult march(const SdeProblem& problem, const ScalarField& terminal,
                  double x_lo, double x_hi, int m_x, int m_t,
                  BoundaryPolicy boundary, bool record,
                  std::vector<std::string>* warnings) {
    if (problem.start.size() != 1 || problem.drift.dimension != 1 ||
        problem.diffusion.dimension != 1 || terminal.dimension != 1)
        throw std::invalid_argument("solve_backward_kolmogorov: d = 1 only");
    if (!(x_lo < x_hi)) throw std::invalid_argument("solver domain is empty");
    if (m_x < 8) throw std::invalid_argument("solver needs at least 8 space points");

    // Grid Peclet guard: refine dx until |b| dx <= sigma^2 everywhere.
    std::vector<double> bvals, s2vals, space;
    double dx = 0.0;
    Vec arg(1), bout(1);
    Mat sout(1, 1);
    for (int attempt = 0;; ++attempt) {
        dx = (x_hi - x_lo) / (m_x - 1);
        space.resize(m_x);
        bvals.resize(m_x);
        s2vals.resize(m_x);
        double worst = 0.0;
        for (int i = 0; i < m_x; ++i) {
            space[i] = x_lo + dx * i;
            arg[0] = space[i];
            problem.drift.evaluate(arg, bout);
            problem.diffusion.evaluate(arg, sout);
            bvals[i] = bout[0];
            s2vals[i] = sout(0, 0) * sout(0, 0);
            if (s2vals[i] <= 0.0)
                throw std::runtime_error("solve_backward_kolmogorov: degenerate diffusion");
            worst = std::max(worst, std::abs(bvals[i]) * dx / s2vals[i]);
        }
        if (worst <= 1.0) break;
        if (attempt == 4)
            throw std::runtime_error("solve_backward_kolmogorov: grid Peclet violation persists");
        if (warnings != nullptr)
            warnings->push_back("grid Peclet number " + std::to_string(worst) +
                                " at m_x=" + std::to_string(m_x) + ", refining");
        m_x = 2 * (m_x - 1) + 1;
    }

    const TimeGrid tgrid = build_time_grid(m_t);
    const int nt = static_cast<int>(tgrid.tau.size());

    // Generator stencil: L u = 1/2 sigma^2 u_xx + b u_x, centered.
    std::vector<double> l_lo(m_x), l_di(m_x), l_up(m_x);
    for (int i = 1; i + 1 < m_x; ++i) {
        const double c2 = 0.5 * s2vals[i] / (dx * dx);
        const double c1 = 0.5 * bvals[i] / dx;
        l_lo[i] = c2 - c1;
        l_di[i] = -2.0 * c2;
        l_up[i] = c2 + c1;
    }
    if (boundary == BoundaryPolicy::neumann) {
        const double c2l = s2vals[0] / (dx * dx);
        l_lo[0] = 0.0;
        l_di[0] = -c2l;
        l_up[0] = c2l;
        const double c2r = s2vals[m_x - 1] / (dx * dx);
        l_lo[m_x - 1] = c2r;
        l_di[m_x - 1] = -c2r;
        l_up[m_x - 1] = 0.0;
    } else {
        l_lo[0] = l_di[0] = l_up[0] = 0.0;
        l_lo[m_x - 1] = l_di[m_x - 1] = l_up[m_x - 1] = 0.0;
    }

    std::vector<double> u(m_x);
    for (int i = 0; i < m_x; ++i) {
        arg[0] = space[i];
        u[i] = terminal.evaluate(arg);
    }

    MarchResult out;
    out.tau = tgrid.tau;
    out.dx = dx;
    out.space = space;
    if (record) {
        out.rows.resize(static_cast<std::size_t>(nt) * m_x);
        std::copy(u.begin(), u.end(), out.rows.begin());
    }

    std::vector<double> a_lo(m_x), a_di(m_x), a_up(m_x), rhs(m_x), scratch;
    for (int step = 1; step < nt; ++step) {
        const double dt = tgrid.tau[step] - tgrid.tau[step - 1];
        const double theta = step <= tgrid.startup_steps ? 1.0 : 0.5;
        for (int i = 0; i < m_x; ++i) {
            a_lo[i] = -theta * dt * l_lo[i];
            a_di[i] = 1.0 - theta * dt * l_di[i];
            a_up[i] = -theta * dt * l_up[i];
            const double explicit_part = (1.0 - theta) * dt;
            rhs[i] = u[i] + explicit_part * (l_di[i] * u[i] +
                                             (i > 0 ? l_lo[i] * u[i - 1] : 0.0) +
                                             (i + 1 < m_x ? l_up[i] * u[i + 1] : 0.0));
        }
        thomas_solve(a_lo, a_di, a_up, rhs, scratch);
        u.swap(rhs);
        if (record)
            std::copy(u.begin(), u.end(),
                      out.rows.begin() + static_cast<std::size_t>(step) * m_x);
    }
    for (double v : u)
        if (!std::isfinite(v))
            throw std::runtime_error("solve_backward_kolmogorov: solution not finite");
    if (!record) out.rows = std::move(u);
    return out;
}

}  // namespace

PdeSolution::PdeSolution(std::vector<double> times, std::vector<double> space,
                         std::vector<double> u, std::vector<std::string> warnings)
    : times_(std::move(times)),
      space_(std::move(space)),
      u_(std::move(u)),
      warnings_(std::move(warnings)) {
    if (times_.size() < 2 || space_.size() < 3)
        throw std::invalid_argument("PdeSolution: degenerate grid");
    if (u_.size() != times_.size() * space_.size())
        throw std::invalid_argument("PdeSolution: field size mismatch");
    dx_ = (space_.back() - space_.front()) / (static_cast<double>(space_.size()) - 1.0);
    build_derivatives();
}

void PdeSolution::build_derivatives() {
    const int mt = time_points();
    const int mx = space_points();
    du_.resize(u_.size());
    d2u_.resize(u_.size());
    for (int ti = 0; ti < mt; ++ti) {
        const double* row = u_.data() + index(ti, 0);
        double* d1 = du_.data() + index(ti, 0);
        double* d2 = d2u_.data() + index(ti, 0);
        for (int i = 1; i + 1 < mx; ++i) {
            d1[i] = (row[i + 1] - row[i - 1]) / (2.0 * dx_);
            d2[i] = (row[i + 1] - 2.0 * row[i] + row[i - 1]) / (dx_ * dx_);
        }
        d1[0] = (-3.0 * row[0] + 4.0 * row[1] - row[2]) / (2.0 * dx_);
        d1[mx - 1] = (3.0 * row[mx - 1] - 4.0 * row[mx - 2] + row[mx - 3]) / (2.0 * dx_);
        d2[0] = d2[1];
        d2[mx - 1] = d2[mx - 2];
    }
}

bool PdeSolution::in_hull(double t, double x) const {
    const double slack = 1e-12;
    return t >= times_.back() - slack && t <= times_.front() + slack &&
           x >= space_.front() - slack && x <= space_.back() + slack;
}

double PdeSolution::interpolate(const std::vector<double>& field, double t,
                                double x) const {
    if (!in_hull(t, x))
        throw std::domain_error("PdeSolution: query outside the grid hull");
    // times_ is decreasing; bracket so times_[ti-1] >= t >= times_[ti].
    auto it = std::lower_bound(times_.begin(), times_.end(), t, std::greater<>());
    int ti = static_cast<int>(it - times_.begin());
    ti = std::clamp(ti, 1, time_points() - 1);
    const double t_hi = times_[ti - 1];
    const double t_lo = times_[ti];
    const double wt = t_hi == t_lo ? 1.0 : (t_hi - t) / (t_hi - t_lo);

    double s = (x - space_.front()) / dx_;
    int xi = std::clamp(static_cast<int>(std::floor(s)), 0, space_points() - 2);
    const double wx = std::clamp(s - xi, 0.0, 1.0);

    const double* hi_row = field.data() + index(ti - 1, 0);
    const double* lo_row = field.data() + index(ti, 0);
    const double v_hi = hi_row[xi] * (1.0 - wx) + hi_row[xi + 1] * wx;
    const double v_lo = lo_row[xi] * (1.0 - wx) + lo_row[xi + 1] * wx;
    return v_hi * (1.0 - wt) + v_lo * wt;
}

double PdeSolution::eval_u(double t, double x) const { return interpolate(u_, t, x); }
double PdeSolution::eval_du(double t, double x) const { return interpolate(du_, t, x); }
double PdeSolution::eval_d2u(double t, double x) const { return interpolate(d2u_, t, x); }

PdeSolution solve_backward_kolmogorov(const SdeProblem& problem,
                                      const ScalarField& terminal, double x_lo,
                                      double x_hi, int m_x, int m_t,
                                      BoundaryPolicy boundary) {
    std::vector<std::string> warnings;
    MarchResult res =
        march(problem, terminal, x_lo, x_hi, m_x, m_t, boundary, true, &warnings);
    // march runs forward in tau = 1 - t, so rows already order t from 1 to 0.
    std::vector<double> times(res.tau.size());
    for (std::size_t i = 0; i < res.tau.size(); ++i) times[i] = 1.0 - res.tau[i];
    return PdeSolution(std::move(times), std::move(res.space), std::move(res.rows),
                       std::move(warnings));
}

double suggest_domain_halfwidth(const SdeProblem& problem) {
    const double b_sup = problem.drift.regularity.sup_bound;
    const double s_sup = problem.diffusion.smoothness.sup_bound;
    if (!std::isfinite(b_sup) || !std::isfinite(s_sup))
        throw std::invalid_argument("suggest_domain_halfwidth: unbounded coefficients");
    return 8.0 * (s_sup + b_sup);
}

SchauderProfile schauder_profile(const PdeSolution& solution, int gamma, double beta) {
    if (gamma != 1 && gamma != 2)
        throw std::invalid_argument("schauder_profile: gamma must be 1 or 2");
    SchauderProfile profile;
    profile.gamma = gamma;
    profile.beta = beta;
    const int mt = solution.time_points();
    const int mx = solution.space_points();
    profile.points.reserve(static_cast<std::size_t>(mt));
    for (int ti = 0; ti < mt; ++ti) {
        double c0 = 0.0, c1 = 0.0, c2 = 0.0;
        for (int xi = 0; xi < mx; ++xi) {
            c0 = std::max(c0, std::abs(solution.u_at(ti, xi)));
            c1 = std::max(c1, std::abs(solution.du_at(ti, xi)));
            if (gamma == 2) c2 = std::max(c2, std::abs(solution.d2u_at(ti, xi)));
        }
        SchauderPoint p;
        p.t = solution.times()[ti];
        p.top_seminorm = gamma == 1 ? c1 : c2;
        p.c_norm = gamma == 1 ? c0 + c1 : c0 + c1 + c2;
        profile.points.push_back(p);
    }
    return profile;
}

FeynmanKacResult feynman_kac_reference(const SdeProblem& problem,
                                       const ScalarField& terminal,
                                       double accuracy_target) {
    if (!(accuracy_target > 0.0))
        throw std::invalid_argument("feynman_kac_reference: target must be positive");
    const double x0 = problem.start[0];
    const double half = suggest_domain_halfwidth(problem);
    const double width = 2.0 * half;

    int m_x = 9;
    while ((m_x - 1) * 0.02 < width && m_x < (1 << 14) + 1) m_x = 2 * (m_x - 1) + 1;
    int m_t = 4 * (kDyadicLevels + 1) + 1;

    double prev = 0.0;
    bool have_prev = false;
    double prev_gap = 0.0;
    for (int level = 0; level < 6; ++level) {
        MarchResult res = march(problem, terminal, x0 - half, x0 + half, m_x, m_t,
                                BoundaryPolicy::neumann, false, nullptr);
        const double s = (x0 - res.space.front()) / res.dx;
        const int i = std::clamp(static_cast<int>(std::floor(s)), 0,
                                 static_cast<int>(res.space.size()) - 2);
        const double w = s - i;
        const double value = res.rows[i] * (1.0 - w) + res.rows[i + 1] * w;

        if (have_prev) {
            const double gap = std::abs(value - prev);
            if (gap <= accuracy_target)
                return FeynmanKacResult{value + (value - prev) / 3.0, gap, level};
            if (level >= 3 && gap > 0.9 * prev_gap)
                throw std::runtime_error(
                    "feynman_kac_reference: refinement stopped converging");
            prev_gap = gap;
        }
        prev = value;
        have_prev = true;
        m_x = 2 * (m_x - 1) + 1;
        m_t = 2 * (m_t - 1) + 1;
    }
    throw std::runtime_error("feynman_kac_reference: accuracy target not reached");
}

}  // namespace roughsde
