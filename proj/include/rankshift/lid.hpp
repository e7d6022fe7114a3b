#pragma once

// Local intrinsic dimensionality estimation from nearest-neighbor distance
// profiles, and the per-query (delta, ell_hat) measurement built on it.

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "rankshift/types.hpp"

namespace rankshift {

// Thrown when a profile carries no scale information (all distances equal):
// the Hill estimate would divide by zero.
class DegenerateProfileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sorted distances from one query to its nearest dataset points.
// At least two entries, all strictly positive, nondecreasing.
struct NeighborProfile {
  std::uint64_t query_id;
  std::vector<double> distances;

  NeighborProfile(std::uint64_t id, std::vector<double> d);
};

struct LidEstimate {
  double ell_hat;  // > 0
  int k_used;      // number of profile entries entering the estimate
};

// Hill estimator over the whole profile (the zero log-ratio of the last
// entry against itself included in the average):
//   ell_hat = -( (1/k) sum_{i=1..k} log(d_i / d_k) )^{-1}.
// Scale-free: depends on the distances only through the ratios d_i / d_k.
LidEstimate hill_estimate(const NeighborProfile& profile);

// delta = 1 - d_{k_t}/d_{k_x} plus the Hill estimate from the same profile.
// Requires profile length == k_x.  A tie d_{k_t} == d_{k_x} yields delta = 0
// with the tie flag set; an all-equal profile throws DegenerateProfileError.
DeltaSample delta_and_lid(const NeighborProfile& profile, const RankPair& ranks);

// Partition samples by Hill estimate into width-sized bins, key =
// floor(ell_hat / bin_width); bins are closed below, open above.  Every
// sample lands in exactly one bin.
std::map<long, std::vector<DeltaSample>> bin_by_lid(std::span<const DeltaSample> samples,
                                                    double bin_width);

}  // namespace rankshift
