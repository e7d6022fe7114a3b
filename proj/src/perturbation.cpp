#include "rankshift/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rankshift {

FiniteDeltaModel::FiniteDeltaModel(RankPair ranks, DistanceLaw law, std::int64_t n,
                                   std::size_t mc_samples, std::uint64_t seed)
    : ranks_(ranks), law_(std::move(law)), n_(n), mc_samples_(mc_samples), seed_(seed) {
  if (!ranks_.is_toward())
    throw std::invalid_argument("FiniteDeltaModel: toward ranks required");
  if (n_ < ranks_.k_x())
    throw std::invalid_argument("FiniteDeltaModel: need n >= k_x");
  if (mc_samples_ < 1000)
    throw std::invalid_argument("FiniteDeltaModel: need mc_samples >= 1000");
  // Xi ~ Beta(k_x, n - k_x + 1): the cdf value of the k_x-th order statistic.
  // Drawn once; every finite_cdf evaluation reuses them.
  Rng rng(seed_);
  xi_ = sample_beta(BetaParams(static_cast<double>(ranks_.k_x()),
                               static_cast<double>(n_ - ranks_.k_x() + 1)),
                    rng, mc_samples_);
  if (!law_.pure_power) {
    xi_quantiles_.reserve(xi_.size());
    for (const double xi : xi_) xi_quantiles_.push_back(law_.quantile(xi));
  }
}

double delta_from_distances(double t, double x) {
  if (!(t > 0.0) || !(x > t))
    throw std::domain_error("delta_from_distances: require 0 < t < x");
  return 1.0 - t / x;
}

double joint_order_pdf(const FiniteDeltaModel& model, double t, double x) {
  if (t >= x || t < 0.0) return 0.0;
  const int k_t = model.ranks().k_t();
  const int k_x = model.ranks().k_x();
  const auto n = static_cast<double>(model.n());
  const DistanceLaw& law = model.law();

  const double ft = law.cdf(t);
  const double fx = law.cdf(x);
  const double dt = law.pdf(t);
  const double dx = law.pdf(x);
  if (dt <= 0.0 || dx <= 0.0) return 0.0;

  // F(t)^{k_t-1} [F(x)-F(t)]^{k_x-k_t-1} [1-F(x)]^{n-k_x} f(t) f(x)
  // normalized by B(k_t, k_x-k_t) B(k_x, n-k_x+1); log space with 0^0 = 1.
  double logp = std::log(dt) + std::log(dx);
  const auto accumulate = [&logp](double base, double expo) {
    if (expo == 0.0) return true;  // 0^0 = 1
    if (base <= 0.0) return false;
    logp += expo * std::log(base);
    return true;
  };
  if (!accumulate(ft, static_cast<double>(k_t - 1))) return 0.0;
  if (!accumulate(fx - ft, static_cast<double>(k_x - k_t - 1))) return 0.0;
  if (!accumulate(1.0 - fx, n - static_cast<double>(k_x))) return 0.0;
  logp -= log_beta(static_cast<double>(k_t), static_cast<double>(k_x - k_t));
  logp -= log_beta(static_cast<double>(k_x), n - static_cast<double>(k_x) + 1.0);
  return std::exp(logp);
}

double finite_cdf(const FiniteDeltaModel& model, double delta) {
  if (delta <= 0.0) return 0.0;
  if (delta >= 1.0) return 1.0;
  const int k_t = model.ranks().k_t();
  const int k_x = model.ranks().k_x();
  const BetaParams inner(static_cast<double>(k_t), static_cast<double>(k_x - k_t));
  const DistanceLaw& law = model.law();

  if (law.pure_power) {
    // F((1-delta) F^{-1}(xi)) / xi = (1-delta)^ell exactly: the expectation
    // over Xi collapses and the finite law equals the asymptotic one.
    const double z = std::pow(1.0 - delta, law.rv_index);
    return 1.0 - reg_inc_beta(z, inner);
  }

  double acc = 0.0;
  const auto& xis = model.xi_draws();
  const auto& xs = model.xi_quantiles();
  for (std::size_t i = 0; i < xis.size(); ++i) {
    double ratio = law.cdf((1.0 - delta) * xs[i]) / xis[i];
    ratio = std::clamp(ratio, 0.0, 1.0);
    acc += reg_inc_beta(ratio, inner);
  }
  const double cdf = 1.0 - acc / static_cast<double>(xis.size());
  return std::clamp(cdf, 0.0, 1.0);
}

double asymptotic_cdf(const AsymptoticDeltaModel& model, double delta) {
  if (delta <= 0.0) return 0.0;
  if (delta >= 1.0) return 1.0;
  const double ell = model.lid.value;
  const int k_t = model.ranks.k_t();
  const int k_x = model.ranks.k_x();
  const double z = 1.0 - std::pow(1.0 - delta, ell);
  return reg_inc_beta(z, BetaParams(static_cast<double>(k_x - k_t), static_cast<double>(k_t)));
}

double asymptotic_pdf(const AsymptoticDeltaModel& model, double delta) {
  if (delta < 0.0 || delta > 1.0) return 0.0;
  const double ell = model.lid.value;
  const auto k_t = static_cast<double>(model.ranks.k_t());
  const auto k_x = static_cast<double>(model.ranks.k_x());
  const double one_m = 1.0 - delta;
  // (ell / B(k_x-k_t, k_t)) (1-(1-d)^ell)^{k_x-k_t-1} (1-d)^{k_t ell - 1}
  const double a = k_x - k_t - 1.0;
  const double b = k_t * ell - 1.0;
  double v = ell / std::exp(log_beta(k_x - k_t, k_t));
  const double u = 1.0 - std::pow(one_m, ell);
  if (a != 0.0) v *= std::pow(u, a);
  if (b != 0.0) v *= std::pow(one_m, b);
  return v;
}

std::vector<double> sample_asymptotic(const AsymptoticDeltaModel& model, Rng& rng,
                                      std::size_t count) {
  const double inv_ell = 1.0 / model.lid.value;
  const auto k_t = static_cast<double>(model.ranks.k_t());
  const auto k_x = static_cast<double>(model.ranks.k_x());
  std::vector<double> out(count);
  for (auto& d : out) d = 1.0 - std::pow(rng.beta(k_t, k_x - k_t), inv_ell);
  return out;
}

double expectation_taylor(const AsymptoticDeltaModel& model) {
  const double ell = model.lid.value;
  const auto k_t = static_cast<double>(model.ranks.k_t());
  const auto k_x = static_cast<double>(model.ranks.k_x());
  const double lead = std::pow(k_t / k_x, 1.0 / ell);
  const double corr = (ell - 1.0) / (2.0 * ell * ell) * (k_x - k_t) / (k_t * (k_x + 1.0));
  return 1.0 - lead * (1.0 - corr);
}

double expectation_exact_kt1(const AsymptoticDeltaModel& model) {
  if (model.ranks.k_t() != 1)
    throw std::domain_error("expectation_exact_kt1: requires k_t == 1");
  const double ell = model.lid.value;
  const auto k_x = static_cast<double>(model.ranks.k_x());
  // E[delta] = 1 - (k_x - 1) B(1 + 1/ell, k_x - 1)
  return 1.0 - (k_x - 1.0) * std::exp(log_beta(1.0 + 1.0 / ell, k_x - 1.0));
}

ExpectationResult expectation(const AsymptoticDeltaModel& model) {
  if (model.ranks.k_t() == 1)
    return {expectation_exact_kt1(model), ExpectationMethod::exact_kt1};
  return {expectation_taylor(model), ExpectationMethod::taylor};
}

double median(const AsymptoticDeltaModel& model) {
  const auto k_t = static_cast<double>(model.ranks.k_t());
  const auto k_x = static_cast<double>(model.ranks.k_x());
  const double b_med = inv_reg_inc_beta(0.5, BetaParams(k_t, k_x - k_t));
  return 1.0 - std::pow(b_med, 1.0 / model.lid.value);
}

double median_approx(const AsymptoticDeltaModel& model) {
  const int k_t = model.ranks.k_t();
  const int k_x = model.ranks.k_x();
  if (k_t < 2 || k_x < k_t + 2)
    throw std::domain_error("median_approx: valid only for k_t >= 2 and k_x >= k_t + 2");
  const double ratio = (static_cast<double>(k_t) - 1.0 / 3.0) /
                       (static_cast<double>(k_x) - 2.0 / 3.0);
  return 1.0 - std::pow(ratio, 1.0 / model.lid.value);
}

double median_exact_kt1(const AsymptoticDeltaModel& model) {
  if (model.ranks.k_t() != 1)
    throw std::domain_error("median_exact_kt1: requires k_t == 1");
  const auto k_x = static_cast<double>(model.ranks.k_x());
  const double inner = 1.0 - std::pow(2.0, -1.0 / (k_x - 1.0));
  return 1.0 - std::pow(inner, 1.0 / model.lid.value);
}

ModeResult mode(const AsymptoticDeltaModel& model) {
  const double ell = model.lid.value;
  const auto k_t = static_cast<double>(model.ranks.k_t());
  const auto k_x = static_cast<double>(model.ranks.k_x());
  const double kt_ell = k_t * ell;
  if (kt_ell > 1.0 && k_x - k_t > 1.0) {
    const double v = 1.0 - std::pow((kt_ell - 1.0) / ((k_x - 1.0) * ell - 1.0), 1.0 / ell);
    return {v, true};
  }
  // Density is monotone (or divergent) on [0,1]: peak sits at an endpoint.
  if (kt_ell < 1.0) return {1.0, false};            // (1-d)^{k_t ell - 1} blows up at 1
  if (k_x - k_t > 1.0) return {1.0, false};          // kt_ell == 1: increasing
  if (kt_ell > 1.0) return {0.0, false};             // k_x - k_t == 1: decreasing
  return {0.0, false};                               // flat (uniform) density
}

double success_probability(const AsymptoticDeltaModel& model, double epsilon) {
  if (!(epsilon >= 0.0))
    throw std::domain_error("success_probability: epsilon must be >= 0");
  const auto k_t = static_cast<double>(model.ranks.k_t());
  const auto k_x = static_cast<double>(model.ranks.k_x());
  const double typical = 1.0 - std::pow(k_t / k_x, 1.0 / model.lid.value);
  return asymptotic_cdf(model, typical + epsilon);
}

double normalize_delta(double delta, LidIndex measured, LidIndex target) {
  if (!(delta >= 0.0) || !(delta <= 1.0))
    throw std::domain_error("normalize_delta: delta outside [0,1]");
  if (delta == 0.0) return 0.0;
  if (delta == 1.0) return 1.0;
  return 1.0 - std::pow(1.0 - delta, measured.value / target.value);
}

double away_cdf(const RankPair& away_ranks, LidIndex lid, double delta) {
  if (away_ranks.is_toward())
    throw std::invalid_argument("away_cdf: away ranks required (k_x < k_t)");
  if (!(delta >= 0.0)) throw std::domain_error("away_cdf: delta must be >= 0");
  if (delta == 0.0) return 0.0;
  const auto k_t = static_cast<double>(away_ranks.k_t());
  const auto k_x = static_cast<double>(away_ranks.k_x());
  // delta = B^{-1/ell} - 1, B ~ Beta(k_x, k_t - k_x):
  // P(delta <= d) = P(B >= (1+d)^{-ell}) = 1 - I_{(1+d)^{-ell}}(k_x, k_t-k_x)
  const double z = std::pow(1.0 + delta, -lid.value);
  return 1.0 - reg_inc_beta(z, BetaParams(k_x, k_t - k_x));
}

}  // namespace rankshift
