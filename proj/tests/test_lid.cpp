#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "rankshift/lid.hpp"
#include "rankshift/perturbation.hpp"
#include "rankshift/stats.hpp"
#include "rankshift/synthetic.hpp"

using namespace rankshift;

TEST_SUITE_BEGIN("lid");

TEST_CASE("neighbor profile validates its invariants") {
  CHECK_NOTHROW(NeighborProfile(0, {1.0, 2.0, 2.0, 3.0}));
  CHECK_THROWS_AS(NeighborProfile(0, {1.0}), std::invalid_argument);          // too short
  CHECK_THROWS_AS(NeighborProfile(0, {0.0, 1.0}), std::invalid_argument);     // zero distance
  CHECK_THROWS_AS(NeighborProfile(0, {-1.0, 1.0}), std::invalid_argument);    // negative
  CHECK_THROWS_AS(NeighborProfile(0, {2.0, 1.0}), std::invalid_argument);     // unsorted
}

TEST_CASE("hill estimate closed-form values and scale behavior") {
  const double inv_e = std::exp(-1.0);
  const auto base = hill_estimate(NeighborProfile(0, {inv_e, 1.0}));
  CHECK(base.ell_hat == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(base.k_used == 2);

  // scaling by a power of two is exact in floating point, so the estimate is
  // bitwise identical
  const auto scaled2 = hill_estimate(NeighborProfile(0, {inv_e * 4.0, 4.0}));
  CHECK(scaled2.ell_hat == base.ell_hat);

  // float32-representable distances scaled by 1000 stay exactly representable,
  // so the ratios (and the estimate) are again bitwise identical
  std::vector<double> f32;
  Rng rng(51);
  for (int i = 0; i < 64; ++i) f32.push_back(static_cast<float>(0.25 + rng.uniform()));
  std::sort(f32.begin(), f32.end());
  auto f32_scaled = f32;
  for (auto& v : f32_scaled) v *= 1000.0;
  CHECK(hill_estimate(NeighborProfile(1, f32)).ell_hat ==
        hill_estimate(NeighborProfile(2, f32_scaled)).ell_hat);

  // arbitrary positive scales agree to within rounding of the products
  auto arb = f32;
  for (auto& v : arb) v *= 0.727351;
  const double a = hill_estimate(NeighborProfile(3, f32)).ell_hat;
  const double b = hill_estimate(NeighborProfile(4, arb)).ell_hat;
  CHECK(std::abs(a - b) <= 1e-12 * std::abs(a));
}

TEST_CASE("hill estimate on an exact power profile matches direct summation") {
  // d_i = (i / k_x)^{1/ell}: the estimate has the closed form
  // ell * k_x / sum_{i=1..k_x} log(k_x / i).
  const double ell = 7.0;
  const int k_x = 50;
  std::vector<double> d(k_x);
  for (int i = 1; i <= k_x; ++i)
    d[i - 1] = std::pow(static_cast<double>(i) / k_x, 1.0 / ell);
  double log_sum = 0.0;
  for (int i = 1; i <= k_x; ++i) log_sum += std::log(static_cast<double>(k_x) / i);
  const double expected = ell * k_x / log_sum;
  CHECK(hill_estimate(NeighborProfile(0, d)).ell_hat ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("hill estimate rejects degenerate profiles") {
  CHECK_THROWS_AS(hill_estimate(NeighborProfile(0, {2.0, 2.0, 2.0})),
                  DegenerateProfileError);
}

TEST_CASE("hill estimate median is near the true index on synthetic profiles") {
  const auto law = make_power_law(10.0);
  Rng rng(52);
  const int k_x = 100;
  const auto draws = sample_order_stats(law, k_x, k_x, rng, 100000);
  std::vector<double> estimates;
  estimates.reserve(draws.size());
  for (const auto& d : draws)
    estimates.push_back(hill_estimate(NeighborProfile(0, d.distances)).ell_hat);
  std::nth_element(estimates.begin(), estimates.begin() + estimates.size() / 2,
                   estimates.end());
  const double med = estimates[estimates.size() / 2];
  CHECK(med == doctest::Approx(10.0).epsilon(0.10));
}

TEST_CASE("delta and index measurement from one profile") {
  const auto ranks = RankPair::toward(2, 4);
  const auto s = delta_and_lid(NeighborProfile(7, {1.0, 2.0, 3.0, 4.0}), ranks);
  CHECK(s.query_id == 7);
  CHECK(s.delta == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_FALSE(s.tie);
  CHECK(s.ell_hat > 0.0);

  CHECK_THROWS_AS(delta_and_lid(NeighborProfile(0, {1.0, 1.0, 1.0, 1.0}), ranks),
                  DegenerateProfileError);
  CHECK_THROWS_AS(delta_and_lid(NeighborProfile(0, {1.0, 2.0, 3.0}), ranks),
                  std::invalid_argument);  // length must equal k_x

  const auto tied = delta_and_lid(NeighborProfile(1, {1.0, 2.0, 2.0, 2.0}), ranks);
  CHECK(tied.tie);
  CHECK(tied.delta == 0.0);
}

TEST_CASE("building a profile from shuffled input reproduces the sorted result") {
  std::vector<double> d = {0.5, 0.9, 1.3, 2.2, 2.9, 3.1};
  const auto expected = delta_and_lid(NeighborProfile(0, d), RankPair::toward(2, 6));
  std::mt19937 shuffler(99);
  for (int trial = 0; trial < 5; ++trial) {
    auto scrambled = d;
    std::shuffle(scrambled.begin(), scrambled.end(), shuffler);
    std::sort(scrambled.begin(), scrambled.end());
    const auto got = delta_and_lid(NeighborProfile(0, scrambled), RankPair::toward(2, 6));
    CHECK(got.delta == expected.delta);
    CHECK(got.ell_hat == expected.ell_hat);
  }
}

TEST_CASE("measured deltas from synthetic profiles match the limit model") {
  const auto law = make_power_law(5.0);
  const auto ranks = RankPair::toward(2, 4);
  Rng rng(53);
  const auto draws = sample_order_stats(law, 1000, 4, rng, 100000);
  std::vector<double> deltas;
  deltas.reserve(draws.size());
  for (const auto& d : draws)
    deltas.push_back(delta_and_lid(NeighborProfile(0, d.distances), ranks).delta);
  const AsymptoticDeltaModel model(ranks, LidIndex(5.0));
  const auto ks =
      ks_statistic(deltas, [&model](double d) { return asymptotic_cdf(model, d); });
  CHECK(ks.statistic < 0.01);
}

TEST_CASE("index binning is the lower-closed partition") {
  std::vector<DeltaSample> samples;
  samples.push_back({0, 0.1, 7.3, false});   // bin 1: [5, 10)
  samples.push_back({1, 0.2, 10.0, false});  // bin 2: boundary is lower-closed
  samples.push_back({2, 0.3, 4.99, false});  // bin 0
  samples.push_back({3, 0.4, 5.0, false});   // bin 1
  const auto bins = bin_by_lid(samples, 5.0);
  REQUIRE(bins.count(0) == 1);
  REQUIRE(bins.count(1) == 1);
  REQUIRE(bins.count(2) == 1);
  CHECK(bins.at(0).size() == 1);
  CHECK(bins.at(1).size() == 2);
  CHECK(bins.at(2).size() == 1);
  CHECK(bins.at(1)[0].query_id == 0);
  CHECK(bins.at(1)[1].query_id == 3);

  std::size_t total = 0;
  for (const auto& [key, members] : bins) total += members.size();
  CHECK(total == samples.size());

  CHECK_THROWS_AS(bin_by_lid(samples, 0.0), std::invalid_argument);
}

TEST_SUITE_END();
