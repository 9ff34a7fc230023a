#include "roughsde/coefficients.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace roughsde {

namespace {

// In-place z -> z^p for z = re + i*im on (approximately) the unit circle.
inline void complex_unit_pow(double& re, double& im, int p) {
  if (p == 2) {  // common case: base-2 lacunary series
    const double t = re * re - im * im;
    im = 2.0 * re * im;
    re = t;
  } else {
    double rre = 1.0, rim = 0.0, bre = re, bim = im;
    for (int e = p; e > 0; e >>= 1) {
      if (e & 1) {
        const double t = rre * bre - rim * bim;
        rim = rre * bim + rim * bre;
        rre = t;
      }
      if (e > 1) {
        const double t = bre * bre - bim * bim;
        bim = 2.0 * bre * bim;
        bre = t;
      }
    }
    re = rre;
    im = rim;
  }
  // One Newton step for 1/sqrt(|z|^2) keeps the modulus pinned to 1 so the
  // error does not compound over the level recursion.
  const double scale = 0.5 * (3.0 - (re * re + im * im));
  re *= scale;
  im *= scale;
}

void check_dimension(int dimension) {
  if (dimension < 1 || dimension > kMaxDim)
    throw std::invalid_argument("dimension must be in [1, 8]");
}

}  // namespace

VectorField make_weierstrass_drift(double alpha, double amplitude, int base, int levels,
                                   const std::vector<double>& phases, int dimension) {
  check_dimension(dimension);
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0,1)");
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
    throw std::invalid_argument("amplitude must be finite and >= 0");
  if (base < 2) throw std::invalid_argument("base must be an integer >= 2");
  if (levels < 1) throw std::invalid_argument("levels must be >= 1");
  if (levels * std::log2(static_cast<double>(base)) > 40.0)
    throw std::invalid_argument("base^levels too large");
  if (!phases.empty() && static_cast<int>(phases.size()) != levels + 1)
    throw std::invalid_argument("phases must be empty or have levels+1 entries");

  const int terms = levels + 1;
  std::vector<double> amp(terms), cos_ph(terms), sin_ph(terms);
  double sup = 0.0;
  for (int k = 0; k < terms; ++k) {
    amp[k] = amplitude * std::pow(static_cast<double>(base), -alpha * k);
    const double ph = phases.empty() ? 0.0 : phases[k];
    cos_ph[k] = std::cos(ph);
    sin_ph[k] = std::sin(ph);
    sup += amp[k];
  }

  VectorField field;
  field.dimension = dimension;
  field.regularity.alpha = alpha;
  field.regularity.sup_bound = sup;
  // |cos u - cos v| <= min(2, |u-v|) <= 2^{1-alpha} |u-v|^alpha, then each term
  // scales as amplitude * base^{-alpha k} * (base^k)^alpha = amplitude.
  field.regularity.holder_seminorm_bound = amplitude * std::pow(2.0, 1.0 - alpha) * terms;
  field.evaluate = [terms, base, amp, cos_ph, sin_ph](const Vec& x, Vec& out) {
    for (int i = 0; i < x.size(); ++i) {
      double re = std::cos(x[i]), im = std::sin(x[i]);  // e^{i base^k x}, k = 0
      double sum = 0.0;
      for (int k = 0; k < terms; ++k) {
        sum += amp[k] * (re * cos_ph[k] - im * sin_ph[k]);
        if (k + 1 < terms) complex_unit_pow(re, im, base);
      }
      out[i] = sum;
    }
  };
  return field;
}

MatrixField make_elliptic_diffusion(double mu, double eps, const MatrixField& modulation,
                                    double modulation_sup_norm) {
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
  if (!(eps >= 0.0)) throw std::invalid_argument("eps must be nonnegative");
  if (!(modulation_sup_norm >= 0.0)) throw std::invalid_argument("sup norm must be nonnegative");
  if (eps * modulation_sup_norm >= mu)
    throw std::invalid_argument("ellipticity would fail: eps * sup||S|| must be < mu");

  MatrixField sigma;
  sigma.dimension = modulation.dimension;
  const double gap = mu - eps * modulation_sup_norm;
  sigma.ellipticity.lambda = gap * gap;
  sigma.smoothness.sup_bound = mu + eps * modulation_sup_norm;
  sigma.smoothness.d1_bound = eps * modulation.smoothness.d1_bound;
  sigma.smoothness.d2_bound = eps * modulation.smoothness.d2_bound;
  sigma.evaluate = [mu, eps, mod = modulation.evaluate](const Vec& x, Mat& out) {
    mod(x, out);
    out *= eps;
    out.diagonal().array() += mu;
  };
  return sigma;
}

MatrixField make_sin_modulation(int dimension) {
  check_dimension(dimension);
  MatrixField field;
  field.dimension = dimension;
  field.smoothness = {1.0, 1.0, 1.0};
  field.evaluate = [](const Vec& x, Mat& out) {
    out.setZero();
    for (int i = 0; i < x.size(); ++i) out(i, i) = std::sin(x[i]);
  };
  return field;
}

MatrixField make_constant_matrix(const Mat& value) {
  MatrixField field;
  field.dimension = static_cast<int>(value.rows());
  check_dimension(field.dimension);
  if (value.rows() != value.cols()) throw std::invalid_argument("matrix must be square");
  field.smoothness = {value.norm(), 0.0, 0.0};
  const Eigen::SelfAdjointEigenSolver<Mat> es(value * value.transpose());
  field.ellipticity.lambda = es.eigenvalues().minCoeff();
  field.evaluate = [value](const Vec&, Mat& out) { out = value; };
  return field;
}

VectorField make_zero_drift(int dimension) {
  check_dimension(dimension);
  VectorField field;
  field.dimension = dimension;
  field.regularity = {1.0, 0.0, 0.0};
  field.evaluate = [](const Vec&, Vec& out) { out.setZero(); };
  return field;
}

VectorField make_constant_drift(const Vec& value) {
  VectorField field;
  field.dimension = static_cast<int>(value.size());
  check_dimension(field.dimension);
  field.regularity = {1.0, value.norm(), 0.0};
  field.evaluate = [value](const Vec&, Vec& out) { out = value; };
  return field;
}

VectorField make_linear_drift(double rate, int dimension) {
  check_dimension(dimension);
  VectorField field;
  field.dimension = dimension;
  // Unbounded; for diagnostics and closed-form tests only.
  field.regularity = {1.0, std::numeric_limits<double>::infinity(), std::abs(rate)};
  field.evaluate = [rate](const Vec& x, Vec& out) { out = rate * x; };
  return field;
}

VectorField make_sin_drift(double amplitude, int dimension) {
  check_dimension(dimension);
  VectorField field;
  field.dimension = dimension;
  field.regularity = {1.0, std::abs(amplitude), std::abs(amplitude)};
  field.evaluate = [amplitude](const Vec& x, Vec& out) {
    for (int i = 0; i < x.size(); ++i) out[i] = amplitude * std::sin(x[i]);
  };
  return field;
}

ScalarField make_coordinate_terminal(int dimension, int coordinate) {
  check_dimension(dimension);
  if (coordinate < 0 || coordinate >= dimension)
    throw std::invalid_argument("coordinate out of range");
  ScalarField field;
  field.dimension = dimension;
  field.regularity = {1.0, std::numeric_limits<double>::infinity(), 1.0};
  field.evaluate = [coordinate](const Vec& x) { return x[coordinate]; };
  return field;
}

ScalarField make_cos_terminal(int dimension) {
  check_dimension(dimension);
  ScalarField field;
  field.dimension = dimension;
  field.regularity = {1.0, 1.0, 1.0};
  field.evaluate = [](const Vec& x) { return std::cos(x[0]); };
  return field;
}

ScalarField make_sin_terminal(int dimension) {
  check_dimension(dimension);
  ScalarField field;
  field.dimension = dimension;
  field.regularity = {1.0, 1.0, 1.0};
  field.evaluate = [](const Vec& x) { return std::sin(x[0]); };
  return field;
}

ScalarField make_sqrt_abs_sin_terminal(int dimension) {
  check_dimension(dimension);
  ScalarField field;
  field.dimension = dimension;
  // | |sin x|^{1/2} - |sin y|^{1/2} | <= |sin x - sin y|^{1/2} <= |x-y|^{1/2}.
  field.regularity = {0.5, 1.0, 1.0};
  field.evaluate = [](const Vec& x) { return std::sqrt(std::abs(std::sin(x[0]))); };
  return field;
}

C1TestFunction make_lacunary_c1(int base, int levels, const std::vector<double>& phases,
                                int dimension) {
  check_dimension(dimension);
  if (base < 2) throw std::invalid_argument("base must be >= 2");
  if (levels < 1) throw std::invalid_argument("levels must be >= 1");
  if (!phases.empty() && static_cast<int>(phases.size()) != levels + 1)
    throw std::invalid_argument("phases must be empty or have levels+1 entries");
  const int terms = levels + 1;
  std::vector<double> freq(terms), ph(terms);
  double dsup = 0.0, d2sup = 0.0;
  for (int k = 0; k < terms; ++k) {
    freq[k] = std::pow(static_cast<double>(base), k);
    ph[k] = phases.empty() ? 0.0 : phases[k];
    dsup += freq[k] / terms;
    d2sup += freq[k] * freq[k] / terms;
  }
  C1TestFunction fn;
  fn.value.dimension = dimension;
  fn.value.regularity = {1.0, 1.0, dsup};
  fn.value.evaluate = [terms, freq, ph](const Vec& x) {
    double sum = 0.0;
    for (int k = 0; k < terms; ++k) sum += std::sin(freq[k] * x[0] + ph[k]);
    return sum / terms;
  };
  fn.derivative.dimension = dimension;
  fn.derivative.regularity = {1.0, dsup, d2sup};
  fn.derivative.evaluate = [terms, freq, ph](const Vec& x) {
    double sum = 0.0;
    for (int k = 0; k < terms; ++k) sum += freq[k] * std::cos(freq[k] * x[0] + ph[k]);
    return sum / terms;
  };
  return fn;
}

double holder_seminorm_estimate(const std::function<double(const Vec&)>& f, double alpha,
                                const std::vector<Vec>& grid) {
  if (grid.size() < 2) throw std::invalid_argument("grid needs at least 2 points");
  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) values[i] = f(grid[i]);
  double best = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i + 1; j < grid.size(); ++j) {
      const double dist = (grid[i] - grid[j]).norm();
      if (dist == 0.0) continue;
      const double quot = std::abs(values[i] - values[j]) / std::pow(dist, alpha);
      if (quot > best) best = quot;
    }
  }
  return best;
}

double holder_seminorm_estimate(const VectorField& f, double alpha,
                                const std::vector<Vec>& grid) {
  if (grid.size() < 2) throw std::invalid_argument("grid needs at least 2 points");
  std::vector<Vec> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) values[i] = f(grid[i]);
  double best = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i + 1; j < grid.size(); ++j) {
      const double dist = (grid[i] - grid[j]).norm();
      if (dist == 0.0) continue;
      const double quot = (values[i] - values[j]).norm() / std::pow(dist, alpha);
      if (quot > best) best = quot;
    }
  }
  return best;
}

std::vector<Vec> uniform_grid_1d(double lo, double hi, int count, int dimension) {
  check_dimension(dimension);
  if (count < 2) throw std::invalid_argument("count must be >= 2");
  std::vector<Vec> grid(count);
  for (int i = 0; i < count; ++i) {
    Vec x = Vec::Zero(dimension);
    x[0] = lo + (hi - lo) * static_cast<double>(i) / (count - 1);
    grid[i] = x;
  }
  return grid;
}

}  // namespace roughsde
