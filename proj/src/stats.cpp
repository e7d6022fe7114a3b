#include "rankshift/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rankshift {

namespace {

constexpr double kCfEpsilon = 1e-15;
constexpr double kCfTiny = 1e-300;
constexpr int kCfMaxIter = 20000;

// Modified Lentz evaluation of the continued fraction for the incomplete
// beta function (the b_i/a_i scheme from the standard treatment).
double beta_cont_frac(double x, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kCfTiny) d = kCfTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kCfMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kCfTiny) d = kCfTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kCfTiny) c = kCfTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kCfTiny) d = kCfTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kCfTiny) c = kCfTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kCfEpsilon) return h;
  }
  throw NonConvergenceError("incomplete beta continued fraction did not converge");
}

double beta_log_front(double x, double a, double b) {
  // log of x^a (1-x)^b / B(a,b); symmetric under (x,a,b) -> (1-x,b,a).
  return a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
}

// Beta density, safe at the endpoints (returns 0 or +inf as the limit).
double beta_pdf(double x, double a, double b) {
  if (x <= 0.0 || x >= 1.0) {
    if (x == 0.0) return a < 1.0 ? std::numeric_limits<double>::infinity() : (a == 1.0 ? b : 0.0);
    if (x == 1.0) return b < 1.0 ? std::numeric_limits<double>::infinity() : (b == 1.0 ? a : 0.0);
    return 0.0;
  }
  return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta(a, b));
}

// Type-7 quantile (linear interpolation) of an ascending-sorted array.
double quantile_sorted(std::span<const double> sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = p * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

// Cubic B-spline kernel on [-2,2]; integrates to one.
double bspline3(double u) {
  const double au = std::fabs(u);
  if (au >= 2.0) return 0.0;
  if (au <= 1.0) return (4.0 - 6.0 * au * au + 3.0 * au * au * au) / 6.0;
  const double t = 2.0 - au;
  return t * t * t / 6.0;
}

struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

double kahan_mean(std::span<const double> xs) {
  KahanSum s;
  for (double v : xs) s.add(v);
  return s.sum / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
  const double m = kahan_mean(xs);
  KahanSum s;
  for (double v : xs) {
    const double d = v - m;
    s.add(d * d);
  }
  return std::sqrt(s.sum / static_cast<double>(xs.size() - 1));
}

void check_grid(const std::vector<double>& grid, const char* what) {
  if (grid.size() < 2) throw std::invalid_argument(std::string(what) + ": grid needs >= 2 points");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      throw std::invalid_argument(std::string(what) + ": grid must be strictly increasing");
}

void check_finite(std::span<const double> xs, const char* what) {
  for (double v : xs)
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite sample");
}

// Sum of kernel contributions at point g from sorted samples, window-limited.
double kernel_sum_at(std::span<const double> sorted, double g, double h) {
  const auto lo = std::lower_bound(sorted.begin(), sorted.end(), g - 2.0 * h);
  const auto hi = std::upper_bound(lo, sorted.end(), g + 2.0 * h);
  KahanSum s;
  for (auto it = lo; it != hi; ++it) s.add(bspline3((g - *it) / h));
  return s.sum;
}

}  // namespace

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double reg_inc_beta(double x, const BetaParams& p) {
  if (!(x >= 0.0) || !(x <= 1.0))
    throw std::domain_error("reg_inc_beta: x must lie in [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double a = p.alpha;
  const double b = p.beta;
  const double front = std::exp(beta_log_front(x, a, b));
  // Symmetry switch keeps the continued fraction in its fast-convergence zone.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cont_frac(x, a, b) / a;
  return 1.0 - front * beta_cont_frac(1.0 - x, b, a) / b;
}

double inv_reg_inc_beta(double u, const BetaParams& p) {
  if (!(u >= 0.0) || !(u <= 1.0))
    throw std::domain_error("inv_reg_inc_beta: u must lie in [0,1]");
  if (u == 0.0) return 0.0;
  if (u == 1.0) return 1.0;

  double lo = 0.0;
  double hi = 1.0;
  double x = p.alpha / (p.alpha + p.beta);  // start at the mean
  double fx = reg_inc_beta(x, p) - u;

  // Small shapes put quantiles exponentially close to 0, so the bracket may
  // need to halve all the way into the denormal range (~1100 steps) before
  // adjacent doubles pinch it shut.
  for (int it = 0; it < 1500; ++it) {
    if (fx == 0.0) return x;
    if (fx > 0.0)
      hi = x;
    else
      lo = x;
    if (std::nextafter(lo, 1.0) >= hi) break;

    // Newton step from the current point, bisection whenever it escapes the
    // bracket or the density is unusable.
    double next = 0.5 * (lo + hi);
    const double dens = beta_pdf(x, p.alpha, p.beta);
    if (dens > 0.0 && std::isfinite(dens)) {
      const double cand = x - fx / dens;
      if (cand > lo && cand < hi) next = cand;
    }
    x = next;
    fx = reg_inc_beta(x, p) - u;
  }

  // The bracket is machine-tight, but the last probe may be the worse of its
  // two endpoints; either adjacent double can be the closest representable
  // preimage, so check both before declaring the tolerance unreachable.
  const double flo = reg_inc_beta(lo, p) - u;
  const double fhi = reg_inc_beta(hi, p) - u;
  x = std::fabs(flo) <= std::fabs(fhi) ? lo : hi;
  fx = std::fabs(flo) <= std::fabs(fhi) ? flo : fhi;
  if (std::fabs(fx) > 1e-10)
    throw NonConvergenceError("inv_reg_inc_beta: tolerance not reached");
  return x;
}

double reg_lower_inc_gamma(double a, double x) {
  if (!(a > 0.0)) throw std::domain_error("reg_lower_inc_gamma: a must be positive");
  if (!(x >= 0.0)) throw std::domain_error("reg_lower_inc_gamma: x must be nonnegative");
  if (x == 0.0) return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    // Series representation.
    double ap = a;
    double term = 1.0 / a;
    double sum = term;
    for (int i = 0; i < kCfMaxIter; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * kCfEpsilon)
        return sum * std::exp(-x + a * std::log(x) - lg);
    }
    throw NonConvergenceError("incomplete gamma series did not converge");
  }
  // Continued fraction for the upper function, modified Lentz.
  double b = x + 1.0 - a;
  double c = 1.0 / kCfTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kCfMaxIter; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kCfTiny) d = kCfTiny;
    c = b + an / c;
    if (std::fabs(c) < kCfTiny) c = kCfTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kCfEpsilon)
      return 1.0 - h * std::exp(-x + a * std::log(x) - lg);
  }
  throw NonConvergenceError("incomplete gamma continued fraction did not converge");
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  has_spare_ = true;
  return u * m;
}

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) throw std::domain_error("Rng::gamma: shape must be positive");
  if (shape < 1.0) {
    // Boost to shape+1 and scale back.
    const double g = gamma(shape + 1.0);
    return g * std::pow(uniform(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Rng::beta(double a, double b) {
  const double ga = gamma(a);
  const double gb = gamma(b);
  double r = ga / (ga + gb);
  // Keep strictly inside (0,1) even when one gamma underflows.
  if (!(r > 0.0)) r = std::numeric_limits<double>::min();
  if (!(r < 1.0)) r = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  return r;
}

std::vector<double> sample_beta(const BetaParams& p, Rng& rng, std::size_t count) {
  std::vector<double> out(count);
  for (auto& v : out) v = rng.beta(p.alpha, p.beta);
  return out;
}

double KsReport::floor_99() const {
  if (n_samples == 0) return 0.0;
  return 1.63 / std::sqrt(static_cast<double>(n_samples));
}

KsReport ks_statistic(std::span<const double> samples,
                      const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double stat = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    const double above = static_cast<double>(i + 1) / n - f;
    const double below = f - static_cast<double>(i) / n;
    stat = std::max(stat, std::max(above, below));
  }
  return KsReport{stat, s.size()};
}

double EmpiricalDensity1D::trapezoid() const {
  double acc = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    acc += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
  return acc;
}

double EmpiricalDensity2D::trapezoid() const {
  const std::size_t ny = grid_y.size();
  double acc = 0.0;
  for (std::size_t ix = 1; ix < grid_x.size(); ++ix) {
    const double dx = grid_x[ix] - grid_x[ix - 1];
    for (std::size_t iy = 1; iy < ny; ++iy) {
      const double dy = grid_y[iy] - grid_y[iy - 1];
      const double cell = values[ix * ny + iy] + values[ix * ny + iy - 1] +
                          values[(ix - 1) * ny + iy] + values[(ix - 1) * ny + iy - 1];
      acc += 0.25 * cell * dx * dy;
    }
  }
  return acc;
}

double silverman_bandwidth(std::span<const double> samples) {
  if (samples.size() < 2) throw std::invalid_argument("silverman_bandwidth: need >= 2 samples");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  if (s.front() == s.back())
    throw std::domain_error("silverman_bandwidth: all samples equal (zero bandwidth)");
  const double sd = sample_std(s);
  const double iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  return 0.9 * spread * std::pow(static_cast<double>(s.size()), -0.2);
}

EmpiricalDensity1D kde_1d(std::span<const double> samples, std::vector<double> grid) {
  if (samples.size() < 10) throw std::invalid_argument("kde_1d: need >= 10 samples");
  check_finite(samples, "kde_1d");
  check_grid(grid, "kde_1d");
  const double h = silverman_bandwidth(samples);
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  EmpiricalDensity1D out;
  out.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    out.values[i] = kernel_sum_at(s, grid[i], h) / (n * h);
  out.grid = std::move(grid);
  return out;
}

EmpiricalDensity2D kde_2d(std::span<const double> xs, std::span<const double> ys,
                          std::vector<double> grid_x, std::vector<double> grid_y) {
  if (xs.size() != ys.size()) throw std::invalid_argument("kde_2d: coordinate arrays differ in length");
  if (xs.size() < 100) throw std::invalid_argument("kde_2d: need >= 100 sample pairs");
  check_finite(xs, "kde_2d");
  check_finite(ys, "kde_2d");
  check_grid(grid_x, "kde_2d");
  check_grid(grid_y, "kde_2d");

  double hx, hy;
  try {
    hx = silverman_bandwidth(xs);
  } catch (const std::domain_error&) {
    throw std::domain_error("kde_2d: x axis degenerate (all coordinates equal)");
  }
  try {
    hy = silverman_bandwidth(ys);
  } catch (const std::domain_error&) {
    throw std::domain_error("kde_2d: y axis degenerate (all coordinates equal)");
  }

  // Sort sample pairs by x so each x grid point sees a contiguous window.
  std::vector<std::size_t> order(xs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> sx(xs.size()), sy(xs.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    sx[i] = xs[order[i]];
    sy[i] = ys[order[i]];
  }

  const std::size_t ny = grid_y.size();
  const double n = static_cast<double>(sx.size());
  EmpiricalDensity2D out;
  out.values.assign(grid_x.size() * ny, 0.0);
  std::vector<KahanSum> row(ny);
  for (std::size_t ix = 0; ix < grid_x.size(); ++ix) {
    const double gx = grid_x[ix];
    for (auto& k : row) k = KahanSum{};
    const auto lo = std::lower_bound(sx.begin(), sx.end(), gx - 2.0 * hx) - sx.begin();
    const auto hi = std::upper_bound(sx.begin() + lo, sx.end(), gx + 2.0 * hx) - sx.begin();
    for (auto s = static_cast<std::size_t>(lo); s < static_cast<std::size_t>(hi); ++s) {
      const double kx = bspline3((gx - sx[s]) / hx);
      if (kx == 0.0) continue;
      // y grid window for this sample
      const auto ylo = std::lower_bound(grid_y.begin(), grid_y.end(), sy[s] - 2.0 * hy) - grid_y.begin();
      for (auto iy = static_cast<std::size_t>(ylo); iy < ny; ++iy) {
        const double u = (grid_y[iy] - sy[s]) / hy;
        if (u > 2.0) break;
        row[iy].add(kx * bspline3(u));
      }
    }
    for (std::size_t iy = 0; iy < ny; ++iy) out.values[ix * ny + iy] = row[iy].sum / (n * hx * hy);
  }
  out.grid_x = std::move(grid_x);
  out.grid_y = std::move(grid_y);
  return out;
}

}  // namespace rankshift
