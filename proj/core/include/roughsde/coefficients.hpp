#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

// Coefficient fields for the SDE dX = b(X)dt + sigma(X)dW with certified
// regularity metadata: Hoelder tags for drift/terminal data, C2 bounds and an
// ellipticity certificate for the diffusion. Declared bounds are analytic
// upper bounds; grid estimates are lower bounds, and tests compare the two.

namespace roughsde {

inline constexpr int kMaxDim = 8;

// Stack-allocated small vectors/matrices; dimension is runtime but <= kMaxDim.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

struct RegularityTag {
  double alpha = 1.0;                 // Hoelder exponent in (0,1]
  double sup_bound = 0.0;             // C0 bound
  double holder_seminorm_bound = 0.0; // [f]_alpha bound
};

// sup-norm bounds on a matrix field and its first two derivatives.
struct C2Certificate {
  double sup_bound = 0.0;
  double d1_bound = 0.0;
  double d2_bound = 0.0;
};

struct EllipticityCert {
  double lambda = 0.0;  // min eigenvalue of sigma sigma^T, uniform in x
};

struct ScalarField {
  int dimension = 1;
  std::function<double(const Vec&)> evaluate;
  RegularityTag regularity;
};

struct VectorField {
  int dimension = 1;
  std::function<void(const Vec&, Vec&)> evaluate;  // writes a d-vector
  RegularityTag regularity;

  Vec operator()(const Vec& x) const {
    Vec out(dimension);
    evaluate(x, out);
    return out;
  }
};

struct MatrixField {
  int dimension = 1;
  std::function<void(const Vec&, Mat&)> evaluate;  // writes a d x d matrix
  C2Certificate smoothness;
  EllipticityCert ellipticity;

  Mat operator()(const Vec& x) const {
    Mat out(dimension, dimension);
    evaluate(x, out);
    return out;
  }
};

// A scalar test function together with its first derivative (for probes that
// need both, e.g. the gradient-smoothing study).
struct C1TestFunction {
  ScalarField value;
  ScalarField derivative;
};

// b_i(x) = amplitude * sum_{k=0}^{levels} base^{-alpha k} cos(base^k x_i + phi_k).
// phases empty means all zero; otherwise must have levels+1 entries.
// Recorded bounds: sup = amplitude * sum base^{-alpha k},
// [b]_alpha <= amplitude * 2^{1-alpha} * (levels+1).
VectorField make_weierstrass_drift(double alpha, double amplitude, int base, int levels,
                                   const std::vector<double>& phases, int dimension = 1);

// sigma(x) = mu*I + eps*S(x); certificate lambda = (mu - eps*sup||S||)^2.
// Rejects eps*sup||S|| >= mu.
MatrixField make_elliptic_diffusion(double mu, double eps, const MatrixField& modulation,
                                    double modulation_sup_norm);

// Ready-made modulations / coefficient families used by configs and tests.
MatrixField make_sin_modulation(int dimension = 1);       // S(x) = diag(sin x_i)
MatrixField make_constant_matrix(const Mat& value);
VectorField make_zero_drift(int dimension = 1);
VectorField make_constant_drift(const Vec& value);
VectorField make_linear_drift(double rate, int dimension = 1);  // b(x) = rate * x
VectorField make_sin_drift(double amplitude, int dimension = 1);

ScalarField make_coordinate_terminal(int dimension = 1, int coordinate = 0);  // g(x) = x_i
ScalarField make_cos_terminal(int dimension = 1);       // g(x) = cos(x_0)
ScalarField make_sin_terminal(int dimension = 1);       // g(x) = sin(x_0)
ScalarField make_sqrt_abs_sin_terminal(int dimension = 1);  // g = |sin x_0|^{1/2}, 1/2-Hoelder

// G(x) = (levels+1)^{-1} sum_{k=0}^{levels} sin(base^k x + psi_k), ||G||_C0 <= 1,
// with derivative; the multi-scale shape makes |E dG| track the t^{-1/2}
// smoothing envelope over a wide time range.
C1TestFunction make_lacunary_c1(int base, int levels, const std::vector<double>& phases,
                                int dimension = 1);

// Max Hoelder quotient |f(x)-f(y)|/|x-y|^alpha over all pairs of grid points
// (vector fields use the Euclidean norm of the difference). A lower bound for
// the true seminorm; monotone under grid refinement.
double holder_seminorm_estimate(const std::function<double(const Vec&)>& f, double alpha,
                                const std::vector<Vec>& grid);
double holder_seminorm_estimate(const VectorField& f, double alpha, const std::vector<Vec>& grid);

// Uniform 1D grid of points embedded as d-dim vectors varying the first coordinate.
std::vector<Vec> uniform_grid_1d(double lo, double hi, int count, int dimension = 1);

}  // namespace roughsde
