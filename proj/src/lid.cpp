#include "rankshift/lid.hpp"

#include <cmath>

namespace rankshift {

NeighborProfile::NeighborProfile(std::uint64_t id, std::vector<double> d)
    : query_id(id), distances(std::move(d)) {
  if (distances.size() < 2)
    throw std::invalid_argument("NeighborProfile: need at least 2 distances");
  double prev = 0.0;
  for (double v : distances) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument("NeighborProfile: distances must be strictly positive and finite");
    if (v < prev)
      throw std::invalid_argument("NeighborProfile: distances must be nondecreasing");
    prev = v;
  }
}

LidEstimate hill_estimate(const NeighborProfile& profile) {
  const std::size_t k = profile.distances.size();
  const double d_k = profile.distances.back();
  double acc = 0.0;
  for (double v : profile.distances) acc += std::log(v / d_k);
  const double mean_log = acc / static_cast<double>(k);
  if (!(mean_log < 0.0))
    throw DegenerateProfileError("hill_estimate: all distances equal, no scale information");
  return LidEstimate{-1.0 / mean_log, static_cast<int>(k)};
}

DeltaSample delta_and_lid(const NeighborProfile& profile, const RankPair& ranks) {
  if (!ranks.is_toward())
    throw std::invalid_argument("delta_and_lid: toward ranks required");
  if (profile.distances.size() != static_cast<std::size_t>(ranks.k_x()))
    throw std::invalid_argument("delta_and_lid: profile length must equal k_x");
  const LidEstimate lid = hill_estimate(profile);  // throws on degenerate profiles
  const double d_t = profile.distances[static_cast<std::size_t>(ranks.k_t()) - 1];
  const double d_x = profile.distances.back();
  DeltaSample s;
  s.query_id = profile.query_id;
  s.ell_hat = lid.ell_hat;
  if (d_t == d_x) {
    s.delta = 0.0;
    s.tie = true;  // the ranks already coincide in distance: change is free
  } else {
    s.delta = 1.0 - d_t / d_x;
  }
  return s;
}

std::map<long, std::vector<DeltaSample>> bin_by_lid(std::span<const DeltaSample> samples,
                                                    double bin_width) {
  if (!(bin_width > 0.0))
    throw std::invalid_argument("bin_by_lid: bin_width must be positive");
  std::map<long, std::vector<DeltaSample>> bins;
  for (const auto& s : samples)
    bins[static_cast<long>(std::floor(s.ell_hat / bin_width))].push_back(s);
  return bins;
}

}  // namespace rankshift
