#pragma once

// Measurement-versus-model pipeline: turn neighborhood profiles into
// (delta, ell_hat) samples, normalize them to a common index, and compare
// their distribution against the model — marginally, jointly, across dataset
// sizes, and per index bin.  Reports serialize to JSON and CSV.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rankshift/lid.hpp"
#include "rankshift/perturbation.hpp"
#include "rankshift/stats.hpp"
#include "rankshift/synthetic.hpp"
#include "rankshift/types.hpp"

#include <json.hpp>

namespace rankshift {

// Bookkeeping for a measurement run; kept + tie_flagged + degenerate always
// equals input.
struct SampleTally {
  std::size_t input = 0;
  std::size_t kept = 0;         // clean samples
  std::size_t tie_flagged = 0;  // delta == 0 with tie flag, usable but marked
  std::size_t degenerate = 0;   // dropped: no scale information or too short

  bool operator==(const SampleTally&) const = default;
};

struct MeasureResult {
  std::vector<DeltaSample> samples;  // clean + tie-flagged, input order
  SampleTally tally;
};

// One DeltaSample per usable profile.  Degenerate profiles (all distances
// equal, or shorter than k_x) are dropped and tallied, never errors.
// Profiles longer than k_x are measured on their first k_x distances.
MeasureResult measure_all(std::span<const NeighborProfile> profiles, const RankPair& ranks,
                          int threads = 1);

// Per-sample index normalization to the common target; requires unflagged
// samples (filter ties out first).
std::vector<double> normalize_all(std::span<const DeltaSample> samples, LidIndex lid_target);

struct ReportConfig {
  std::string dataset_id;
  int k_t = 0;
  int k_x = 0;
  double lid0 = 0.0;

  bool operator==(const ReportConfig&) const = default;
};

struct ReportMarkers {
  double expectation = 0.0;
  bool expectation_exact = false;  // closed form (k_t = 1) vs Taylor
  double median = 0.0;
  double mode = 0.0;
  bool mode_interior = false;

  bool operator==(const ReportMarkers&) const = default;
};

// Marginal comparison of normalized deltas against the lid0 model.
struct ComparisonReport {
  ReportConfig config;
  SampleTally counts;
  EmpiricalDensity1D empirical;        // KDE on the delta grid
  std::vector<double> theoretical;     // model pdf on the same grid
  KsReport ks;                         // EDF vs model cdf
  double ks_floor_99 = 0.0;            // pure-sampling 99% band at this n
  ReportMarkers markers;

  bool operator==(const ComparisonReport&) const = default;
};

// Uniform grid used for report densities.
std::vector<double> report_delta_grid();  // 512 points on [0,1]

// Requires >= 100 normalized samples.  counts: pass the measurement tally so
// the report reconciles kept + dropped with the input size.
ComparisonReport compare_to_theory(std::span<const double> normalized_deltas,
                                   const RankPair& ranks, LidIndex lid0,
                                   const ReportConfig& config, const SampleTally& counts);

// Joint comparison of the (ell_hat, delta) cloud against the factored
// surface model(delta | ell) * density(ell).
struct JointReport {
  ReportConfig config;
  EmpiricalDensity2D empirical;      // KDE over (ell, delta)
  std::vector<double> model_surface; // same layout as empirical.values
  EmpiricalDensity1D ell_density;    // KDE of ell_hat on the ell grid
  double l1_discrepancy = 0.0;       // integral of |empirical - model|

  bool operator==(const JointReport&) const = default;
};

// Requires >= 1000 unflagged samples with finite positive ell_hat.
JointReport joint_compare(std::span<const DeltaSample> samples, const RankPair& ranks);

// Distribution distance to the large-n limit as the dataset grows.
struct ConvergenceRow {
  std::int64_t n = 0;
  double ks = 0.0;
  std::size_t replicates = 0;

  bool operator==(const ConvergenceRow&) const = default;
};

// One row per dataset size (strictly increasing, all >= k_x); replicates >= 1.
std::vector<ConvergenceRow> convergence_study(const DistanceLaw& law, const RankPair& ranks,
                                              std::span<const std::int64_t> n_values,
                                              std::size_t replicates, Rng& rng);

// Model agreement per Hill-estimate bin, after normalizing each bin's
// samples (by their own ell_hat) to the common lid0.
struct BinnedKsRow {
  long bin = 0;
  double ell_lo = 0.0;
  double ell_hi = 0.0;
  std::size_t count = 0;
  std::optional<double> ks;  // absent when the bin is too small to score
  bool insufficient = false;

  bool operator==(const BinnedKsRow&) const = default;
};

inline constexpr std::size_t kMinBinSamples = 30;

std::vector<BinnedKsRow> binned_ks_study(std::span<const DeltaSample> samples,
                                         const RankPair& ranks, LidIndex lid0,
                                         double bin_width);

// ---- serialization ----

// Base file name encoding the run identity: <dataset>_kt<k>_kx<k>_lid<l0>.
std::string report_basename(const ReportConfig& config);

void to_json(nlohmann::json& j, const KsReport& v);
void from_json(const nlohmann::json& j, KsReport& v);
void to_json(nlohmann::json& j, const EmpiricalDensity1D& v);
void from_json(const nlohmann::json& j, EmpiricalDensity1D& v);
void to_json(nlohmann::json& j, const EmpiricalDensity2D& v);
void from_json(const nlohmann::json& j, EmpiricalDensity2D& v);
void to_json(nlohmann::json& j, const SampleTally& v);
void from_json(const nlohmann::json& j, SampleTally& v);
void to_json(nlohmann::json& j, const ReportConfig& v);
void from_json(const nlohmann::json& j, ReportConfig& v);
void to_json(nlohmann::json& j, const ReportMarkers& v);
void from_json(const nlohmann::json& j, ReportMarkers& v);
void to_json(nlohmann::json& j, const ComparisonReport& v);
void from_json(const nlohmann::json& j, ComparisonReport& v);
void to_json(nlohmann::json& j, const ConvergenceRow& v);
void from_json(const nlohmann::json& j, ConvergenceRow& v);
void to_json(nlohmann::json& j, const BinnedKsRow& v);
void from_json(const nlohmann::json& j, BinnedKsRow& v);
void to_json(nlohmann::json& j, const JointReport& v);
void from_json(const nlohmann::json& j, JointReport& v);

// JSON to <out_dir>/<basename>.compare.json, CSV of the density table to
// <basename>.density.csv and markers to <basename>.markers.csv.
// Returns the written paths.
std::vector<std::string> write_comparison_report(const ComparisonReport& report,
                                                 const std::string& out_dir);

ComparisonReport read_comparison_report(const std::string& json_path);

}  // namespace rankshift
