#pragma once

#include <string>
#include <vector>

#include "roughsde/coefficients.hpp"
#include "roughsde/sde.hpp"

namespace roughsde {

enum class BoundaryPolicy {
    neumann,            // homogeneous Neumann (default)
    dirichlet_terminal  // clamp boundary rows to the terminal data
};

// Backward Kolmogorov solution u(t,x) on [0,1] x [x_lo,x_hi] with the
// derivative fields used by the quadrature functionals. Rows follow times
// (decreasing from 1 to 0), columns the ascending space grid.
class PdeSolution {
  public:
    PdeSolution() = default;
    PdeSolution(std::vector<double> times, std::vector<double> space,
                std::vector<double> u, std::vector<std::string> warnings);

    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& space() const { return space_; }
    const std::vector<std::string>& warnings() const { return warnings_; }
    int time_points() const { return static_cast<int>(times_.size()); }
    int space_points() const { return static_cast<int>(space_.size()); }
    double dx() const { return dx_; }

    double u_at(int ti, int xi) const { return u_[index(ti, xi)]; }
    double du_at(int ti, int xi) const { return du_[index(ti, xi)]; }
    double d2u_at(int ti, int xi) const { return d2u_[index(ti, xi)]; }

    bool in_hull(double t, double x) const;

    // Bilinear interpolation; throws std::domain_error outside the hull.
    double eval_u(double t, double x) const;
    double eval_du(double t, double x) const;
    double eval_d2u(double t, double x) const;

  private:
    std::size_t index(int ti, int xi) const {
        return static_cast<std::size_t>(ti) * space_.size() +
               static_cast<std::size_t>(xi);
    }
    double interpolate(const std::vector<double>& field, double t, double x) const;
    void build_derivatives();

    std::vector<double> times_;  // decreasing, times_[0] = 1
    std::vector<double> space_;  // ascending, uniform
    std::vector<double> u_, du_, d2u_;
    std::vector<std::string> warnings_;
    double dx_ = 0.0;
};

// Crank-Nicolson with damped (implicit) startup steps for
//   d_t u + 1/2 sigma^2(x) d_xx u + b(x) d_x u = 0,  u(1,.) = g,
// marched from t=1 to t=0 on a time grid refined dyadically toward t=1.
// m_t is a target point count; the dyadic construction rounds it. A grid
// Peclet violation (|b| dx > sigma^2) triggers automatic space refinement
// with a warning attached to the solution.
PdeSolution solve_backward_kolmogorov(const SdeProblem& problem,
                                      const ScalarField& terminal, double x_lo,
                                      double x_hi, int m_x, int m_t,
                                      BoundaryPolicy boundary = BoundaryPolicy::neumann);

// Domain half-width heuristic: 8 * (sup|sigma| + sup|b|) around x0, so the
// terminal ensemble's bulk sits far from the artificial boundary.
double suggest_domain_halfwidth(const SdeProblem& problem);

struct SchauderPoint {
    double t = 0.0;
    double c_norm = 0.0;         // discrete C^gamma norm of u(t,.)
    double top_seminorm = 0.0;   // sup of the highest derivative alone
};

struct SchauderProfile {
    int gamma = 1;
    double beta = 0.0;  // declared regularity of the terminal data, recorded
    std::vector<SchauderPoint> points;
};

// Time profile of the discrete C^gamma norm (gamma in {1,2}); the blowup
// toward t=1 is what downstream fits compare against (gamma-beta)/2.
SchauderProfile schauder_profile(const PdeSolution& solution, int gamma, double beta);

struct FeynmanKacResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int refinements = 0;
};

// u(0,x0) by solving at successive grid refinements with Richardson
// extrapolation; the reported error estimate is the last inter-level
// difference. Throws if the target is not reached within the refinement
// budget.
FeynmanKacResult feynman_kac_reference(const SdeProblem& problem,
                                       const ScalarField& terminal,
                                       double accuracy_target);

}  // namespace roughsde
