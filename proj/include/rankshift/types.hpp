#pragma once

// Core domain types shared across the library: neighbor-rank pairs, the
// intrinsic-dimensionality index, and the per-query measurement record.

#include <cstdint>
#include <stdexcept>

namespace rankshift {

// Pair of neighborhood ranks (k_t, k_x): a point currently at rank k_x is
// pushed to rank k_t.  "Toward" pairs (k_t < k_x) promote the point closer
// to the query; "away" pairs (k_x < k_t) demote it.
class RankPair {
 public:
  static RankPair toward(int k_t, int k_x) {
    if (k_t < 1 || k_x <= k_t)
      throw std::invalid_argument("RankPair::toward requires 1 <= k_t < k_x");
    return RankPair(k_t, k_x);
  }

  static RankPair away(int k_t, int k_x) {
    if (k_x < 1 || k_t <= k_x)
      throw std::invalid_argument("RankPair::away requires 1 <= k_x < k_t");
    return RankPair(k_t, k_x);
  }

  int k_t() const { return k_t_; }
  int k_x() const { return k_x_; }
  bool is_toward() const { return k_t_ < k_x_; }

  bool operator==(const RankPair&) const = default;

 private:
  RankPair(int k_t, int k_x) : k_t_(k_t), k_x_(k_x) {}
  int k_t_;
  int k_x_;
};

// Intrinsic-dimensionality index: the regular-variation exponent of the
// distance distribution near zero.  Strictly positive and finite.
struct LidIndex {
  double value;

  explicit LidIndex(double v) : value(v) {
    if (!(v > 0.0) || !(v < 1e308))
      throw std::invalid_argument("LidIndex must be positive and finite");
  }

  bool operator==(const LidIndex&) const = default;
};

// One per-query measurement: the relative perturbation delta together with
// the Hill index estimate from the same neighborhood profile.
struct DeltaSample {
  std::uint64_t query_id = 0;
  double delta = 0.0;    // in [0,1); exactly 0 only when tie is set
  double ell_hat = 0.0;  // Hill estimate from the profile
  bool tie = false;      // d_{k_t} == d_{k_x}: rank change is free

  bool operator==(const DeltaSample&) const = default;
};

}  // namespace rankshift
