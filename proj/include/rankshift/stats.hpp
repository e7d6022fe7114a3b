#pragma once

// Special functions, seeded random sampling, and nonparametric statistics
// (Kolmogorov-Smirnov distance, kernel density estimation) used throughout
// the library.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace rankshift {

// Shape parameters of a Beta distribution.  Both strictly positive and finite.
struct BetaParams {
  double alpha;
  double beta;

  BetaParams(double a, double b) : alpha(a), beta(b) {
    if (!(a > 0.0) || !(b > 0.0) || !(a < 1e308) || !(b < 1e308))
      throw std::domain_error("BetaParams: shapes must be positive and finite");
  }

  bool operator==(const BetaParams&) const = default;
};

// Thrown when an iterative numerical routine fails to reach its tolerance.
class NonConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// log of the Beta function B(a, b).
double log_beta(double a, double b);

// Regularized incomplete beta function I_x(alpha, beta) for x in [0,1].
// Continued-fraction evaluation; absolute error <= 1e-12 for shapes <= 1e4.
double reg_inc_beta(double x, const BetaParams& p);

// Inverse of reg_inc_beta in x: returns x with |I_x(alpha,beta) - u| <= 1e-10.
// Monotone in u.  Throws NonConvergenceError if the tolerance is not met.
double inv_reg_inc_beta(double u, const BetaParams& p);

// Regularized lower incomplete gamma function P(a, x), a > 0, x >= 0.
double reg_lower_inc_gamma(double a, double x);

// Deterministic seeded random generator.  All sampling in the library goes
// through this class so that a fixed seed reproduces every output exactly,
// independent of platform library internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed == 0 ? 0x9e3779b97f4a7c15ull : seed) {
    // Warm up so that trivially different seeds decorrelate.
    for (int i = 0; i < 8; ++i) next_u64();
  }

  std::uint64_t next_u64() {
    // xorshift64* (Vigna): full 2^64-1 period, passes BigCrush.
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545f4914f6cdd1dull;
  }

  // Uniform on the open interval (0,1); 0 and 1 are never returned.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via the polar method (second variate cached).
  double normal();

  // Gamma(shape, 1) via Marsaglia-Tsang squeeze rejection.
  double gamma(double shape);

  // Beta(a, b) as G_a / (G_a + G_b).
  double beta(double a, double b);

  // Standard exponential.
  double exponential() { return -std::log(uniform()); }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// count independent Beta(alpha, beta) draws; every value strictly inside (0,1).
std::vector<double> sample_beta(const BetaParams& p, Rng& rng, std::size_t count);

// Kolmogorov-Smirnov comparison of a sample against a reference CDF.
struct KsReport {
  double statistic = 0.0;     // sup-norm distance between EDF and cdf
  std::size_t n_samples = 0;

  // 99% acceptance band for the statistic under the null, 1.63 / sqrt(n).
  double floor_99() const;

  bool operator==(const KsReport&) const = default;
};

KsReport ks_statistic(std::span<const double> samples,
                      const std::function<double(double)>& cdf);

// Density estimate tabulated on a strictly increasing grid.
struct EmpiricalDensity1D {
  std::vector<double> grid;
  std::vector<double> values;  // all >= 0

  double trapezoid() const;  // integral over the grid span

  bool operator==(const EmpiricalDensity1D&) const = default;
};

// Density estimate on the product of two strictly increasing grids.
// values is row-major: values[ix * grid_y.size() + iy].
struct EmpiricalDensity2D {
  std::vector<double> grid_x;
  std::vector<double> grid_y;
  std::vector<double> values;

  double at(std::size_t ix, std::size_t iy) const { return values[ix * grid_y.size() + iy]; }
  double trapezoid() const;

  bool operator==(const EmpiricalDensity2D&) const = default;
};

// Bandwidth rule used by both density estimators:
// h = 0.9 * min(std, IQR/1.34) * N^(-1/5), zero spread terms ignored.
// Throws std::domain_error when all samples are equal.
double silverman_bandwidth(std::span<const double> samples);

// Kernel density estimate with a cubic B-spline kernel (support [-2,2]) and
// the Silverman bandwidth above.  Requires >= 10 finite samples and a
// strictly increasing grid.  The tabulated values integrate to ~1 whenever
// the grid spans the sample range plus two bandwidths; narrower grids
// tabulate the same density restricted to the grid.
EmpiricalDensity1D kde_1d(std::span<const double> samples, std::vector<double> grid);

// Two-dimensional product-kernel estimate with per-axis bandwidths.
// Requires >= 100 sample pairs; throws std::domain_error when either axis
// is degenerate (all coordinates equal).
EmpiricalDensity2D kde_2d(std::span<const double> xs, std::span<const double> ys,
                          std::vector<double> grid_x, std::vector<double> grid_y);

}  // namespace rankshift
