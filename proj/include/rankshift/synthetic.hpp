#pragma once

// Distance-law abstractions and seeded generators for synthetic neighborhood
// experiments: ground-truth distance distributions with known index, and
// order-statistic sampling that never materializes the full sample.

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "rankshift/stats.hpp"
#include "rankshift/types.hpp"

namespace rankshift {

// A query-to-point distance distribution.  cdf/pdf/quantile describe the
// full law; rv_index is the regular-variation exponent at 0+, i.e. the
// local intrinsic dimensionality the law induces:
//   cdf(lambda * x) / cdf(x) -> lambda^rv_index  as x -> 0+.
struct DistanceLaw {
  std::string name;
  std::function<double(double)> cdf;
  std::function<double(double)> pdf;
  std::function<double(double)> quantile;  // inverse cdf on (0,1)
  double rv_index = 0.0;
  // True only for cdf(x) = x^rv_index on [0,1]; enables closed-form
  // short-circuits downstream.
  bool pure_power = false;
  double support_upper = std::numeric_limits<double>::infinity();
};

// F(x) = x^ell on [0,1].  Requires ell > 0.
DistanceLaw make_power_law(double ell);

// Norm of a dim-variate standard Gaussian (chi distribution).  Its index at
// the origin equals dim, but the law is not a pure power: convergence
// behaviour as n grows is nontrivial.  Requires dim >= 1.
DistanceLaw make_chi_law(int dim);

// The k_x smallest distances out of n i.i.d. draws, sorted ascending.
struct NeighborhoodDraw {
  std::vector<double> distances;
};

// count independent neighborhoods, each the smallest k_x order statistics of
// n i.i.d. samples of the law.  Uses the uniform order-statistic recursion
// plus a quantile transform; cost O(count * k_x), independent of n.
std::vector<NeighborhoodDraw> sample_order_stats(const DistanceLaw& law, std::int64_t n,
                                                 int k_x, Rng& rng, std::size_t count);

// count independent draws of delta = 1 - d_(k_t)/d_(k_x) under the law at
// dataset size n.  Ground truth for convergence studies.
std::vector<double> empirical_delta_distribution(const DistanceLaw& law, std::int64_t n,
                                                 const RankPair& ranks, Rng& rng,
                                                 std::size_t count);

}  // namespace rankshift
