#include "rankshift/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace rankshift {

namespace {

std::string fmt_compact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// Rational approximation to the standard normal quantile (Acklam); used only
// as a Newton starting point, final accuracy comes from the cdf iteration.
double normal_quantile_approx(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

DistanceLaw make_power_law(double ell) {
  if (!(ell > 0.0)) throw std::domain_error("make_power_law: ell must be positive");
  DistanceLaw law;
  law.name = "power:" + fmt_compact(ell);
  law.rv_index = ell;
  law.pure_power = true;
  law.support_upper = 1.0;
  law.cdf = [ell](double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return std::pow(x, ell);
  };
  law.pdf = [ell](double x) {
    if (x <= 0.0 || x > 1.0) return 0.0;
    return ell * std::pow(x, ell - 1.0);
  };
  law.quantile = [ell](double u) {
    if (!(u >= 0.0) || !(u <= 1.0))
      throw std::domain_error("power law quantile: u outside [0,1]");
    return std::pow(u, 1.0 / ell);
  };
  return law;
}

DistanceLaw make_chi_law(int dim) {
  if (dim < 1) throw std::domain_error("make_chi_law: dim must be >= 1");
  const double a = 0.5 * static_cast<double>(dim);
  const double lg = std::lgamma(a);
  DistanceLaw law;
  law.name = "chi:" + std::to_string(dim);
  law.rv_index = static_cast<double>(dim);
  law.pure_power = false;

  auto cdf = [a](double x) {
    if (x <= 0.0) return 0.0;
    return reg_lower_inc_gamma(a, 0.5 * x * x);
  };
  auto pdf = [a, lg](double x) {
    if (x <= 0.0) return 0.0;
    // x^{dim-1} e^{-x^2/2} / (2^{dim/2-1} Gamma(dim/2))
    const double logp = (2.0 * a - 1.0) * std::log(x) - 0.5 * x * x -
                        (a - 1.0) * std::log(2.0) - lg;
    return std::exp(logp);
  };
  law.cdf = cdf;
  law.pdf = pdf;
  law.quantile = [a, cdf, pdf, dim](double u) {
    if (!(u >= 0.0) || !(u < 1.0))
      throw std::domain_error("chi law quantile: u outside [0,1)");
    if (u == 0.0) return 0.0;
    // Start from the leading series term in the left tail, otherwise from the
    // Wilson-Hilferty chi-square approximation; then safeguarded Newton.
    const double df = static_cast<double>(dim);
    double x;
    if (u < 0.01) {
      // cdf(x) ~ (x^2/2)^a / Gamma(a+1) as x -> 0.
      x = std::sqrt(2.0) * std::exp((std::log(u) + std::lgamma(a + 1.0)) / (2.0 * a));
    } else {
      const double z = normal_quantile_approx(u);
      const double wh = 1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df));
      x = std::sqrt(df * std::max(1e-12, wh * wh * wh));
    }

    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 200; ++it) {
      const double f = cdf(x) - u;
      if (f > 0.0)
        hi = x;
      else
        lo = x;
      if (std::fabs(f) <= 1e-12 * u + 1e-15) return x;
      const double dens = pdf(x);
      double next;
      if (dens > 0.0 && std::isfinite(dens)) {
        next = x - f / dens;
        if (!(next > lo) || !(next < hi))
          next = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * std::max(x, 1.0);
      } else {
        next = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * std::max(x, 1.0);
      }
      if (next == x) return x;
      x = next;
    }
    throw NonConvergenceError("chi law quantile: Newton iteration stalled");
  };
  return law;
}

std::vector<NeighborhoodDraw> sample_order_stats(const DistanceLaw& law, std::int64_t n,
                                                 int k_x, Rng& rng, std::size_t count) {
  if (k_x < 1) throw std::invalid_argument("sample_order_stats: k_x must be >= 1");
  if (n < k_x) throw std::invalid_argument("sample_order_stats: need n >= k_x");
  std::vector<NeighborhoodDraw> out(count);
  for (auto& draw : out) {
    draw.distances.resize(static_cast<std::size_t>(k_x));
    // Renyi representation: with E_j ~ Exp(1),
    //   U_(i) = 1 - exp(-sum_{j<=i} E_j / (n - j + 1))
    // walks the smallest uniform order statistics upward in O(k_x).
    double s = 0.0;
    for (int i = 1; i <= k_x; ++i) {
      s += rng.exponential() / static_cast<double>(n - i + 1);
      const double u = -std::expm1(-s);
      draw.distances[static_cast<std::size_t>(i - 1)] = law.quantile(u);
    }
  }
  return out;
}

std::vector<double> empirical_delta_distribution(const DistanceLaw& law, std::int64_t n,
                                                 const RankPair& ranks, Rng& rng,
                                                 std::size_t count) {
  if (!ranks.is_toward())
    throw std::invalid_argument("empirical_delta_distribution: toward ranks required");
  const int k_t = ranks.k_t();
  const int k_x = ranks.k_x();
  if (n < k_x) throw std::invalid_argument("empirical_delta_distribution: need n >= k_x");
  std::vector<double> out(count);
  for (auto& d : out) {
    double s = 0.0;
    double d_t = 0.0, d_x = 0.0;
    for (int i = 1; i <= k_x; ++i) {
      s += rng.exponential() / static_cast<double>(n - i + 1);
      if (i == k_t || i == k_x) {
        const double u = -std::expm1(-s);
        const double dist = law.quantile(u);
        if (i == k_t) d_t = dist;
        if (i == k_x) d_x = dist;
      }
    }
    d = (d_x > 0.0) ? 1.0 - d_t / d_x : 0.0;
  }
  return out;
}

}  // namespace rankshift
