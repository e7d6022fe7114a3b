#include "rankshift/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rankshift/parallel.hpp"

namespace rankshift {

namespace {

std::vector<double> uniform_grid(double lo, double hi, std::size_t points) {
  std::vector<double> g(points);
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) g[i] = lo + step * static_cast<double>(i);
  g.back() = hi;
  return g;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_compact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

MeasureResult measure_all(std::span<const NeighborProfile> profiles, const RankPair& ranks,
                          int threads) {
  if (!ranks.is_toward()) throw std::invalid_argument("measure_all: toward ranks required");
  const auto k_x = static_cast<std::size_t>(ranks.k_x());

  // Slot per profile; drops are marked and compacted afterwards so the
  // result order (and content) is independent of the thread count.
  std::vector<DeltaSample> slots(profiles.size());
  std::vector<std::uint8_t> dropped(profiles.size(), 0);
  parallel_for(profiles.size(), threads, [&](std::size_t i) {
    const NeighborProfile& p = profiles[i];
    if (p.distances.size() < k_x) {
      dropped[i] = 1;
      return;
    }
    try {
      if (p.distances.size() == k_x) {
        slots[i] = delta_and_lid(p, ranks);
      } else {
        NeighborProfile head(p.query_id,
                             std::vector<double>(p.distances.begin(),
                                                 p.distances.begin() + static_cast<std::ptrdiff_t>(k_x)));
        slots[i] = delta_and_lid(head, ranks);
      }
    } catch (const DegenerateProfileError&) {
      dropped[i] = 1;
    }
  });

  MeasureResult out;
  out.tally.input = profiles.size();
  out.samples.reserve(profiles.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (dropped[i]) {
      ++out.tally.degenerate;
      continue;
    }
    if (slots[i].tie)
      ++out.tally.tie_flagged;
    else
      ++out.tally.kept;
    out.samples.push_back(slots[i]);
  }
  return out;
}

std::vector<double> normalize_all(std::span<const DeltaSample> samples, LidIndex lid_target) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.tie)
      throw std::invalid_argument("normalize_all: tie-flagged sample present; filter first");
    out.push_back(normalize_delta(s.delta, LidIndex(s.ell_hat), lid_target));
  }
  return out;
}

std::vector<double> report_delta_grid() { return uniform_grid(0.0, 1.0, 512); }

ComparisonReport compare_to_theory(std::span<const double> normalized_deltas,
                                   const RankPair& ranks, LidIndex lid0,
                                   const ReportConfig& config, const SampleTally& counts) {
  if (normalized_deltas.size() < 100)
    throw std::invalid_argument("compare_to_theory: need >= 100 samples");
  const AsymptoticDeltaModel model(ranks, lid0);

  ComparisonReport report;
  report.config = config;
  report.counts = counts;
  report.empirical = kde_1d(normalized_deltas, report_delta_grid());
  report.theoretical.resize(report.empirical.grid.size());
  for (std::size_t i = 0; i < report.theoretical.size(); ++i)
    report.theoretical[i] = asymptotic_pdf(model, report.empirical.grid[i]);
  report.ks = ks_statistic(normalized_deltas,
                           [&model](double d) { return asymptotic_cdf(model, d); });
  report.ks_floor_99 = report.ks.floor_99();

  const ExpectationResult e = expectation(model);
  report.markers.expectation = e.value;
  report.markers.expectation_exact = (e.method == ExpectationMethod::exact_kt1);
  report.markers.median = median(model);
  const ModeResult m = mode(model);
  report.markers.mode = m.value;
  report.markers.mode_interior = m.interior;
  return report;
}

JointReport joint_compare(std::span<const DeltaSample> samples, const RankPair& ranks) {
  if (samples.size() < 1000)
    throw std::invalid_argument("joint_compare: need >= 1000 samples");
  std::vector<double> ells, deltas;
  ells.reserve(samples.size());
  deltas.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.tie) throw std::invalid_argument("joint_compare: tie-flagged sample present; filter first");
    if (!(s.ell_hat > 0.0) || !std::isfinite(s.ell_hat))
      throw std::invalid_argument("joint_compare: sample with unusable ell_hat");
    ells.push_back(s.ell_hat);
    deltas.push_back(s.delta);
  }

  const double h_ell = silverman_bandwidth(ells);
  const auto [lo_it, hi_it] = std::minmax_element(ells.begin(), ells.end());
  const double ell_lo = *lo_it - 2.0 * h_ell;
  const double ell_hi = *hi_it + 2.0 * h_ell;

  JointReport report;
  report.empirical = kde_2d(ells, deltas, uniform_grid(ell_lo, ell_hi, 128),
                            uniform_grid(0.0, 1.0, 256));
  report.ell_density = kde_1d(ells, report.empirical.grid_x);

  // Factored surface: model pdf of delta conditioned on the grid's ell,
  // weighted by the estimated ell density.
  const std::size_t ny = report.empirical.grid_y.size();
  report.model_surface.assign(report.empirical.values.size(), 0.0);
  for (std::size_t ix = 0; ix < report.empirical.grid_x.size(); ++ix) {
    const double ell = report.empirical.grid_x[ix];
    const double weight = report.ell_density.values[ix];
    if (!(ell > 0.0) || weight <= 0.0) continue;
    const AsymptoticDeltaModel model(ranks, LidIndex(ell));
    for (std::size_t iy = 0; iy < ny; ++iy)
      report.model_surface[ix * ny + iy] =
          weight * asymptotic_pdf(model, report.empirical.grid_y[iy]);
  }

  // L1 distance between the two surfaces over the grid box, trapezoid rule.
  const auto& gx = report.empirical.grid_x;
  const auto& gy = report.empirical.grid_y;
  double acc = 0.0;
  for (std::size_t ix = 0; ix < gx.size(); ++ix) {
    const double wx = (ix == 0 ? gx[1] - gx[0]
                               : (ix + 1 == gx.size() ? gx[ix] - gx[ix - 1]
                                                      : gx[ix + 1] - gx[ix - 1])) * 0.5;
    for (std::size_t iy = 0; iy < ny; ++iy) {
      const double wy = (iy == 0 ? gy[1] - gy[0]
                                 : (iy + 1 == ny ? gy[iy] - gy[iy - 1]
                                                 : gy[iy + 1] - gy[iy - 1])) * 0.5;
      acc += wx * wy *
             std::fabs(report.empirical.values[ix * ny + iy] - report.model_surface[ix * ny + iy]);
    }
  }
  report.l1_discrepancy = acc;
  return report;
}

std::vector<ConvergenceRow> convergence_study(const DistanceLaw& law, const RankPair& ranks,
                                              std::span<const std::int64_t> n_values,
                                              std::size_t replicates, Rng& rng) {
  if (replicates == 0) throw std::invalid_argument("convergence_study: zero replicates");
  if (!ranks.is_toward()) throw std::invalid_argument("convergence_study: toward ranks required");
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    if (n_values[i] < ranks.k_x())
      throw std::invalid_argument("convergence_study: every n must be >= k_x");
    if (i > 0 && n_values[i] <= n_values[i - 1])
      throw std::invalid_argument("convergence_study: n values must be strictly increasing");
  }
  const AsymptoticDeltaModel model(ranks, LidIndex(law.rv_index));
  std::vector<ConvergenceRow> rows;
  rows.reserve(n_values.size());
  for (const auto n : n_values) {
    const std::vector<double> deltas = empirical_delta_distribution(law, n, ranks, rng, replicates);
    const KsReport ks = ks_statistic(deltas, [&model](double d) { return asymptotic_cdf(model, d); });
    rows.push_back(ConvergenceRow{n, ks.statistic, replicates});
  }
  return rows;
}

std::vector<BinnedKsRow> binned_ks_study(std::span<const DeltaSample> samples,
                                         const RankPair& ranks, LidIndex lid0,
                                         double bin_width) {
  const AsymptoticDeltaModel model(ranks, lid0);
  const auto bins = bin_by_lid(samples, bin_width);
  std::vector<BinnedKsRow> rows;
  rows.reserve(bins.size());
  for (const auto& [idx, members] : bins) {
    BinnedKsRow row;
    row.bin = idx;
    row.ell_lo = static_cast<double>(idx) * bin_width;
    row.ell_hi = row.ell_lo + bin_width;
    row.count = members.size();
    if (members.size() < kMinBinSamples) {
      row.insufficient = true;
    } else {
      const std::vector<double> normalized = normalize_all(members, lid0);
      row.ks = ks_statistic(normalized, [&model](double d) { return asymptotic_cdf(model, d); })
                   .statistic;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---- serialization ----

std::string report_basename(const ReportConfig& config) {
  return config.dataset_id + "_kt" + std::to_string(config.k_t) + "_kx" +
         std::to_string(config.k_x) + "_lid" + fmt_compact(config.lid0);
}

void to_json(nlohmann::json& j, const KsReport& v) {
  j = nlohmann::json{{"statistic", v.statistic}, {"n_samples", v.n_samples}};
}
void from_json(const nlohmann::json& j, KsReport& v) {
  j.at("statistic").get_to(v.statistic);
  j.at("n_samples").get_to(v.n_samples);
}

void to_json(nlohmann::json& j, const EmpiricalDensity1D& v) {
  j = nlohmann::json{{"grid", v.grid}, {"values", v.values}};
}
void from_json(const nlohmann::json& j, EmpiricalDensity1D& v) {
  j.at("grid").get_to(v.grid);
  j.at("values").get_to(v.values);
}

void to_json(nlohmann::json& j, const EmpiricalDensity2D& v) {
  j = nlohmann::json{{"grid_x", v.grid_x}, {"grid_y", v.grid_y}, {"values", v.values}};
}
void from_json(const nlohmann::json& j, EmpiricalDensity2D& v) {
  j.at("grid_x").get_to(v.grid_x);
  j.at("grid_y").get_to(v.grid_y);
  j.at("values").get_to(v.values);
}

void to_json(nlohmann::json& j, const SampleTally& v) {
  j = nlohmann::json{{"input", v.input},
                     {"kept", v.kept},
                     {"tie_flagged", v.tie_flagged},
                     {"degenerate", v.degenerate}};
}
void from_json(const nlohmann::json& j, SampleTally& v) {
  j.at("input").get_to(v.input);
  j.at("kept").get_to(v.kept);
  j.at("tie_flagged").get_to(v.tie_flagged);
  j.at("degenerate").get_to(v.degenerate);
}

void to_json(nlohmann::json& j, const ReportConfig& v) {
  j = nlohmann::json{
      {"dataset_id", v.dataset_id}, {"k_t", v.k_t}, {"k_x", v.k_x}, {"lid0", v.lid0}};
}
void from_json(const nlohmann::json& j, ReportConfig& v) {
  j.at("dataset_id").get_to(v.dataset_id);
  j.at("k_t").get_to(v.k_t);
  j.at("k_x").get_to(v.k_x);
  j.at("lid0").get_to(v.lid0);
}

void to_json(nlohmann::json& j, const ReportMarkers& v) {
  j = nlohmann::json{{"expectation", v.expectation},
                     {"expectation_exact", v.expectation_exact},
                     {"median", v.median},
                     {"mode", v.mode},
                     {"mode_interior", v.mode_interior}};
}
void from_json(const nlohmann::json& j, ReportMarkers& v) {
  j.at("expectation").get_to(v.expectation);
  j.at("expectation_exact").get_to(v.expectation_exact);
  j.at("median").get_to(v.median);
  j.at("mode").get_to(v.mode);
  j.at("mode_interior").get_to(v.mode_interior);
}

void to_json(nlohmann::json& j, const ComparisonReport& v) {
  j = nlohmann::json{{"config", v.config},        {"counts", v.counts},
                     {"empirical", v.empirical},  {"theoretical", v.theoretical},
                     {"ks", v.ks},                {"ks_floor_99", v.ks_floor_99},
                     {"markers", v.markers}};
}
void from_json(const nlohmann::json& j, ComparisonReport& v) {
  j.at("config").get_to(v.config);
  j.at("counts").get_to(v.counts);
  j.at("empirical").get_to(v.empirical);
  j.at("theoretical").get_to(v.theoretical);
  j.at("ks").get_to(v.ks);
  j.at("ks_floor_99").get_to(v.ks_floor_99);
  j.at("markers").get_to(v.markers);
}

void to_json(nlohmann::json& j, const ConvergenceRow& v) {
  j = nlohmann::json{{"n", v.n}, {"ks", v.ks}, {"replicates", v.replicates}};
}
void from_json(const nlohmann::json& j, ConvergenceRow& v) {
  j.at("n").get_to(v.n);
  j.at("ks").get_to(v.ks);
  j.at("replicates").get_to(v.replicates);
}

void to_json(nlohmann::json& j, const BinnedKsRow& v) {
  j = nlohmann::json{{"bin", v.bin},     {"ell_lo", v.ell_lo},
                     {"ell_hi", v.ell_hi}, {"count", v.count},
                     {"insufficient", v.insufficient}};
  if (v.ks)
    j["ks"] = *v.ks;
  else
    j["ks"] = nullptr;
}
void from_json(const nlohmann::json& j, BinnedKsRow& v) {
  j.at("bin").get_to(v.bin);
  j.at("ell_lo").get_to(v.ell_lo);
  j.at("ell_hi").get_to(v.ell_hi);
  j.at("count").get_to(v.count);
  j.at("insufficient").get_to(v.insufficient);
  if (j.at("ks").is_null())
    v.ks.reset();
  else
    v.ks = j.at("ks").get<double>();
}

void to_json(nlohmann::json& j, const JointReport& v) {
  j = nlohmann::json{{"config", v.config},
                     {"empirical", v.empirical},
                     {"model_surface", v.model_surface},
                     {"ell_density", v.ell_density},
                     {"l1_discrepancy", v.l1_discrepancy}};
}
void from_json(const nlohmann::json& j, JointReport& v) {
  j.at("config").get_to(v.config);
  j.at("empirical").get_to(v.empirical);
  j.at("model_surface").get_to(v.model_surface);
  j.at("ell_density").get_to(v.ell_density);
  j.at("l1_discrepancy").get_to(v.l1_discrepancy);
}

std::vector<std::string> write_comparison_report(const ComparisonReport& report,
                                                 const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string base = (fs::path(out_dir) / report_basename(report.config)).string();
  std::vector<std::string> written;

  {
    const std::string path = base + ".compare.json";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << nlohmann::json(report).dump(2) << '\n';
    written.push_back(path);
  }
  {
    const std::string path = base + ".density.csv";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "delta,empirical_pdf,model_pdf\n";
    for (std::size_t i = 0; i < report.empirical.grid.size(); ++i)
      f << fmt_double(report.empirical.grid[i]) << ',' << fmt_double(report.empirical.values[i])
        << ',' << fmt_double(report.theoretical[i]) << '\n';
    written.push_back(path);
  }
  {
    const std::string path = base + ".markers.csv";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "name,value\n";
    f << "expectation," << fmt_double(report.markers.expectation) << '\n';
    f << "expectation_method," << (report.markers.expectation_exact ? "exact" : "taylor") << '\n';
    f << "median," << fmt_double(report.markers.median) << '\n';
    f << "mode," << fmt_double(report.markers.mode) << '\n';
    f << "mode_interior," << (report.markers.mode_interior ? 1 : 0) << '\n';
    f << "ks," << fmt_double(report.ks.statistic) << '\n';
    f << "ks_floor_99," << fmt_double(report.ks_floor_99) << '\n';
    written.push_back(path);
  }
  return written;
}

ComparisonReport read_comparison_report(const std::string& json_path) {
  std::ifstream f(json_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + json_path);
  nlohmann::json j;
  f >> j;
  return j.get<ComparisonReport>();
}

}  // namespace rankshift
