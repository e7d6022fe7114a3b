#pragma once

// Distribution of the minimal relative perturbation delta = 1 - d_{k_t}/d_{k_x}
// that moves a point from neighbor rank k_x to rank k_t of a query: exact
// finite-n law, its large-n limit, closed-form summary statistics, the
// index-normalization map, and the away-from-query variant.

#include <cstdint>
#include <vector>

#include "rankshift/stats.hpp"
#include "rankshift/synthetic.hpp"
#include "rankshift/types.hpp"

namespace rankshift {

// Large-n model: delta = 1 - B^{1/ell} with B ~ Beta(k_t, k_x - k_t).
// Only the rank pair and the index enter; the distance law drops out.
struct AsymptoticDeltaModel {
  RankPair ranks;
  LidIndex lid;

  AsymptoticDeltaModel(RankPair r, LidIndex l) : ranks(r), lid(l) {
    if (!ranks.is_toward())
      throw std::invalid_argument("AsymptoticDeltaModel: toward ranks required");
  }
};

// Exact finite-n model for a concrete distance law and dataset size.
// The expectation over Xi ~ Beta(k_x, n-k_x+1) is evaluated by seeded Monte
// Carlo with draws shared across all delta arguments (common random numbers),
// so the returned cdf is monotone in delta for a fixed seed.
class FiniteDeltaModel {
 public:
  FiniteDeltaModel(RankPair ranks, DistanceLaw law, std::int64_t n,
                   std::size_t mc_samples, std::uint64_t seed);

  const RankPair& ranks() const { return ranks_; }
  const DistanceLaw& law() const { return law_; }
  std::int64_t n() const { return n_; }
  std::size_t mc_samples() const { return mc_samples_; }
  std::uint64_t seed() const { return seed_; }

  // Quantile draws of the k_x-th distance's cdf value, fixed by the seed.
  const std::vector<double>& xi_draws() const { return xi_; }

  // law.quantile applied to each xi draw, precomputed once so repeated cdf
  // evaluations share the work.  Empty for pure power laws, which never
  // touch the Monte Carlo path.
  const std::vector<double>& xi_quantiles() const { return xi_quantiles_; }

 private:
  RankPair ranks_;
  DistanceLaw law_;
  std::int64_t n_;
  std::size_t mc_samples_;
  std::uint64_t seed_;
  std::vector<double> xi_;
  std::vector<double> xi_quantiles_;
};

// delta = 1 - t/x for distances 0 < t < x.
double delta_from_distances(double t, double x);

// Joint density of the k_t-th and k_x-th nearest-neighbor distances (t, x)
// under the model's law at dataset size n; zero outside t < x.
double joint_order_pdf(const FiniteDeltaModel& model, double t, double x);

// P(delta_n <= delta) under the exact finite-n law.  Pure power laws collapse
// to the asymptotic closed form and skip the Monte Carlo average entirely.
double finite_cdf(const FiniteDeltaModel& model, double delta);

// P(delta <= .) and density of the large-n law.  Arguments at or beyond the
// endpoints return the boundary values (cdf) or zero outside [0,1] (pdf).
double asymptotic_cdf(const AsymptoticDeltaModel& model, double delta);
double asymptotic_pdf(const AsymptoticDeltaModel& model, double delta);

// count independent draws of delta = 1 - B^{1/ell}.
std::vector<double> sample_asymptotic(const AsymptoticDeltaModel& model, Rng& rng,
                                      std::size_t count);

// Expectation of delta.  k_t = 1 admits an exact closed form; otherwise a
// second-order Taylor approximation is used.  The result records which.
enum class ExpectationMethod { exact_kt1, taylor };

struct ExpectationResult {
  double value;
  ExpectationMethod method;
};

ExpectationResult expectation(const AsymptoticDeltaModel& model);
double expectation_taylor(const AsymptoticDeltaModel& model);
double expectation_exact_kt1(const AsymptoticDeltaModel& model);  // requires k_t == 1

// Median of delta.  median() inverts the beta cdf exactly; median_approx()
// uses the (k_t - 1/3)/(k_x - 2/3) rule, valid for k_t >= 2, k_x >= k_t + 2;
// median_exact_kt1() is the k_t = 1 closed form.
double median(const AsymptoticDeltaModel& model);
double median_approx(const AsymptoticDeltaModel& model);
double median_exact_kt1(const AsymptoticDeltaModel& model);

// Mode of the density.  Interior iff k_t*ell > 1 and k_x - k_t > 1; otherwise
// the density peaks at an endpoint and the report says which one.
struct ModeResult {
  double value;
  bool interior;
};

ModeResult mode(const AsymptoticDeltaModel& model);

// P(delta <= 1 - (k_t/k_x)^{1/ell} + epsilon): chance that a perturbation
// budget epsilon above the typical requirement suffices.
double success_probability(const AsymptoticDeltaModel& model, double epsilon);

// Index normalization: delta measured at index `measured` mapped to the value
// it would take at index `target`, 1 - (1-delta)^(measured/target).
// Accepts delta in [0,1]; endpoints map to themselves.
double normalize_delta(double delta, LidIndex measured, LidIndex target);

// Away-from-query case (k_x < k_t): delta = B^{-1/ell} - 1 >= 0 with
// B ~ Beta(k_x, k_t - k_x).  Returns P(delta <= .) for delta >= 0.
double away_cdf(const RankPair& away_ranks, LidIndex lid, double delta);

}  // namespace rankshift
