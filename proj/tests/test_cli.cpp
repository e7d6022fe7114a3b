#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rankshift/knn.hpp"
#include "rankshift/stats.hpp"

using namespace rankshift;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("cli");

namespace {

struct RunResult {
  int code = -1;
  std::string output;  // stdout + stderr interleaved
};

RunResult run_cli(const std::string& args) {
  const char* bin = std::getenv("RANKSHIFT_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "RANKSHIFT_BIN must point at the tool binary");
  const std::string cmd = std::string(bin) + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  char buf[4096];
  while (std::size_t got = std::fread(buf, 1, sizeof buf, pipe)) r.output.append(buf, got);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "rankshift_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void append_le32(std::string& out, std::int32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

// deterministic gaussian fvecs fixture
void write_fvecs(const fs::path& path, int count, int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::string bytes;
  for (int i = 0; i < count; ++i) {
    append_le32(bytes, dim);
    for (int c = 0; c < dim; ++c) {
      const float v = static_cast<float>(rng.normal());
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      append_le32(bytes, static_cast<std::int32_t>(bits));
    }
  }
  std::ofstream f(path, std::ios::binary);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string slurp(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE_MESSAGE(f.good(), "missing file: " << path.string());
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

nlohmann::json slurp_json(const fs::path& path) { return nlohmann::json::parse(slurp(path)); }

std::size_t line_count(const std::string& text) {
  std::size_t n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("bad invocations exit with the usage code") {
  CHECK(run_cli("").code == 1);
  CHECK(run_cli("frobnicate").code == 1);
  CHECK(run_cli("theory --kt 2 --kx 4").code == 1);  // --lids is required
  CHECK(run_cli("scan --dataset only_one_side.fvecs").code == 1);
  CHECK(run_cli("validate --law nope:3").code == 1);
  CHECK(run_cli("validate --kt 7 --kx 3").code == 1);  // not a toward pair
  CHECK(run_cli("validate --replicates 0").code == 1);
  CHECK(run_cli("scan --dataset a --queries b --topk-format xml").code == 1);
  CHECK(run_cli("theory --kt 2 --kx 4 --lids 5,-2").code == 1);

  const auto help = run_cli("--help");
  CHECK(help.code == 0);
  CHECK(help.output.find("scan") != std::string::npos);

  const auto version = run_cli("--version");
  CHECK(version.code == 0);
  CHECK(version.output.find("0.1.0") != std::string::npos);
}

TEST_CASE("scan writes stable top-k tables and a reproducible manifest") {
  const auto dir = fresh_dir("scan");
  const auto data = dir / "data.fvecs";
  const auto queries = dir / "queries.fvecs";
  write_fvecs(data, 120, 8, 101);
  write_fvecs(queries, 15, 8, 102);

  const std::string out1 = (dir / "out1").string();
  const auto r1 = run_cli("scan --dataset " + data.string() + " --queries " + queries.string() +
                          " --kx 10 --seed 5 --out " + out1);
  CHECK(r1.code == 0);

  const auto csv_path = fs::path(out1) / "data_top10.csv";
  const std::string csv = slurp(csv_path);
  CHECK(line_count(csv) == 1 + 15 * 10);
  CHECK(csv.rfind("query_id,rank,neighbor_id,distance\n", 0) == 0);

  const auto manifest = slurp_json(fs::path(out1) / "scan_manifest.json");
  CHECK(manifest.at("command") == "scan");
  CHECK(manifest.at("version") == "0.1.0");
  CHECK(manifest.at("config").at("kx") == 10);
  CHECK(manifest.at("config").at("seed") == 5);
  CHECK(manifest.at("tallies").at("dataset_points") == 120);
  CHECK(manifest.at("tallies").at("queries") == 15);
  CHECK(manifest.at("outputs").size() == 1);
  CHECK(manifest.at("duration_ms").is_number());

  // same inputs, more threads: byte-identical table
  const std::string out2 = (dir / "out2").string();
  const auto r2 = run_cli("scan --dataset " + data.string() + " --queries " + queries.string() +
                          " --kx 10 --seed 5 --threads 4 --out " + out2);
  CHECK(r2.code == 0);
  CHECK(slurp(fs::path(out2) / "data_top10.csv") == csv);

  // binary table carries the identical result
  const std::string out3 = (dir / "out3").string();
  const auto r3 = run_cli("scan --dataset " + data.string() + " --queries " + queries.string() +
                          " --kx 10 --topk-format bin --out " + out3);
  CHECK(r3.code == 0);
  const auto from_bin = read_topk_binary((fs::path(out3) / "data_top10.bin").string());
  const auto from_csv = read_topk_csv(csv_path.string());
  REQUIRE(from_bin.size() == from_csv.size());
  for (std::size_t i = 0; i < from_bin.size(); ++i) CHECK(from_bin[i] == from_csv[i]);
}

TEST_CASE("scan can skip exact self matches") {
  const auto dir = fresh_dir("scan_self");
  const auto data = dir / "pool.fvecs";
  write_fvecs(data, 60, 6, 103);
  const std::string out = (dir / "out").string();
  const auto r = run_cli("scan --dataset " + data.string() + " --queries " + data.string() +
                         " --kx 3 --exclude-self-matches --out " + out);
  CHECK(r.code == 0);
  const auto results = read_topk_csv((fs::path(out) / "pool_top3.csv").string());
  REQUIRE(results.size() == 60);
  for (const auto& row : results) {
    CHECK(row.ids[0] != static_cast<std::int64_t>(row.query_id));
    CHECK(row.distances[0] > 0.0);
  }
}

TEST_CASE("scan rejects oversized k and unreadable input") {
  const auto dir = fresh_dir("scan_errors");
  const auto data = dir / "data.fvecs";
  const auto queries = dir / "queries.fvecs";
  write_fvecs(data, 120, 8, 104);
  write_fvecs(queries, 5, 8, 105);
  const std::string tail = " --out " + (dir / "out").string();

  const auto too_big = run_cli("scan --dataset " + data.string() + " --queries " +
                               queries.string() + " --kx 200" + tail);
  CHECK(too_big.code == 1);
  CHECK(too_big.output.find("exceeds") != std::string::npos);

  CHECK(run_cli("scan --dataset " + (dir / "absent.fvecs").string() + " --queries " +
                queries.string() + tail)
            .code == 2);

  auto truncated = slurp(data);
  truncated.resize(truncated.size() - 2);
  const auto bad = dir / "bad.fvecs";
  std::ofstream(bad, std::ios::binary).write(truncated.data(),
                                             static_cast<std::streamsize>(truncated.size()));
  CHECK(run_cli("scan --dataset " + bad.string() + " --queries " + queries.string() + tail).code ==
        2);

  CHECK(run_cli("scan --dataset " + data.string() + " --queries " + queries.string() +
                " --format tsv" + tail)
            .code == 2);
}

TEST_CASE("theory tabulates normalized curves and matching markers") {
  const auto dir = fresh_dir("theory");
  const std::string out = (dir / "out").string();
  const auto r =
      run_cli("theory --kt 2 --kx 4 --lids 10,20,30,40,50,60,70 --out " + out);
  CHECK(r.code == 0);

  const std::string curves = slurp(fs::path(out) / "theory_kt2_kx4.csv");
  CHECK(line_count(curves) == 1 + 7 * 4096);

  // parse per-index blocks: delta, cdf, pdf columns
  struct Row {
    double ell, delta, cdf, pdf;
  };
  std::vector<Row> rows;
  {
    std::istringstream in(curves);
    std::string line;
    std::getline(in, line);
    CHECK(line == "ell,delta,cdf,pdf");
    while (std::getline(in, line)) {
      Row row{};
      REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &row.ell, &row.delta, &row.cdf,
                          &row.pdf) == 4);
      rows.push_back(row);
    }
  }
  REQUIRE(rows.size() == 7 * 4096);
  for (int block = 0; block < 7; ++block) {
    const Row* b = rows.data() + static_cast<std::size_t>(block) * 4096;
    CHECK(b[0].delta == 0.0);
    CHECK(b[0].cdf == 0.0);
    CHECK(b[4095].delta == 1.0);
    CHECK(b[4095].cdf == doctest::Approx(1.0).epsilon(1e-12));
    double integral = 0.0;
    bool monotone = true;
    for (int i = 1; i < 4096; ++i) {
      integral += 0.5 * (b[i].pdf + b[i - 1].pdf) * (b[i].delta - b[i - 1].delta);
      monotone = monotone && b[i].cdf >= b[i - 1].cdf;
    }
    CHECK(monotone);
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));
  }

  // mode marker sits on the densest grid point of its own curve
  const std::string markers = slurp(fs::path(out) / "theory_kt2_kx4.markers.csv");
  CHECK(line_count(markers) == 1 + 7 * 5);
  double mode10 = -1.0;
  {
    std::istringstream in(markers);
    std::string line;
    while (std::getline(in, line))
      if (line.rfind("10,mode,", 0) == 0) mode10 = std::stod(line.substr(8));
  }
  REQUIRE(mode10 >= 0.0);
  double best_delta = 0.0, best_pdf = -1.0;
  for (int i = 0; i < 4096; ++i)
    if (rows[static_cast<std::size_t>(i)].pdf > best_pdf) {  // first block is ell = 10
      best_pdf = rows[static_cast<std::size_t>(i)].pdf;
      best_delta = rows[static_cast<std::size_t>(i)].delta;
    }
  CHECK(std::fabs(best_delta - mode10) <= 2.0 / 4095.0);

  const auto manifest = slurp_json(fs::path(out) / "theory_manifest.json");
  CHECK(manifest.at("tallies").at("curves") == 7);
}

TEST_CASE("validate passes its own synthetic checks on a power law") {
  const auto dir = fresh_dir("validate_power");
  const std::string out = (dir / "out").string();
  const auto r = run_cli("validate --replicates 30000 --seed 21 --out " + out);
  CHECK(r.code == 0);
  CHECK(r.output.find("[PASS] power_law_exactness") != std::string::npos);
  CHECK(r.output.find("[PASS] round_trip_ks") != std::string::npos);
  CHECK(r.output.find("[PASS] markers_in_support") != std::string::npos);
  CHECK(r.output.find("[FAIL]") == std::string::npos);

  const auto report = slurp_json(fs::path(out) / "validation_report.json");
  CHECK(report.at("law") == "power:10");
  CHECK(report.at("reference_lid") == 10.0);
  CHECK(report.at("convergence").size() == 3);
  CHECK(report.at("round_trip").at("calibration_ks").is_number());
  for (const auto& criterion : report.at("criteria")) CHECK(criterion.at("passed") == true);

  // the comparison report files accompany the summary
  CHECK(fs::exists(fs::path(out) / "synthetic_power_10_kt10_kx100_lid10.compare.json"));
  CHECK(fs::exists(fs::path(out) / "synthetic_power_10_kt10_kx100_lid10.density.csv"));
  CHECK(fs::exists(fs::path(out) / "synthetic_power_10_kt10_kx100_lid10.markers.csv"));
}

TEST_CASE("validate fails loudly when the reference index is wrong") {
  const auto dir = fresh_dir("validate_control");
  const std::string out = (dir / "out").string();
  const auto r = run_cli(
      "validate --law power:10 --assume-lid 5 --n-sweep 1000 --replicates 20000 --seed 22 "
      "--out " +
      out);
  CHECK(r.code == 3);
  CHECK(r.output.find("[FAIL] power_law_exactness") != std::string::npos);
  const auto report = slurp_json(fs::path(out) / "validation_report.json");
  CHECK(report.at("reference_lid") == 5.0);
  bool any_failed = false;
  for (const auto& criterion : report.at("criteria"))
    if (criterion.at("passed") == false) any_failed = true;
  CHECK(any_failed);
}

TEST_CASE("validate detects convergence for a non-power law") {
  const auto dir = fresh_dir("validate_chi");
  const std::string out = (dir / "out").string();
  const auto r = run_cli(
      "validate --law chi:5 --kt 2 --kx 4 --lid0 5 --n-sweep 100,1000,10000 "
      "--replicates 20000 --seed 23 --out " +
      out);
  CHECK(r.code == 0);
  CHECK(r.output.find("[PASS] convergence_trend") != std::string::npos);
  const auto report = slurp_json(fs::path(out) / "validation_report.json");
  const auto& convergence = report.at("convergence");
  REQUIRE(convergence.size() == 3);
  CHECK(convergence.back().at("ks").get<double>() <
        convergence.front().at("ks").get<double>());
}

TEST_CASE("analyze consumes a scan table and writes the full report set") {
  const auto dir = fresh_dir("analyze");
  const auto data = dir / "base.fvecs";
  const auto queries = dir / "probes.fvecs";
  write_fvecs(data, 1200, 8, 106);
  write_fvecs(queries, 1100, 8, 107);

  const std::string scan_out = (dir / "scan").string();
  REQUIRE(run_cli("scan --dataset " + data.string() + " --queries " + queries.string() +
                  " --kx 100 --out " + scan_out)
              .code == 0);
  const std::string table = (fs::path(scan_out) / "base_top100.csv").string();

  const std::string out1 = (dir / "out1").string();
  const auto r1 = run_cli("analyze --profiles " + table + " --seed 31 --out " + out1);
  CHECK(r1.code == 0);

  const std::string base = "base_top100_kt10_kx100_lid10";
  const auto compare_path = fs::path(out1) / (base + ".compare.json");
  CHECK(fs::exists(compare_path));
  CHECK(fs::exists(fs::path(out1) / (base + ".density.csv")));
  CHECK(fs::exists(fs::path(out1) / (base + ".markers.csv")));
  CHECK(fs::exists(fs::path(out1) / (base + ".joint.json")));
  const auto bins_path = fs::path(out1) / (base + ".bins.csv");
  CHECK(fs::exists(bins_path));

  const auto manifest = slurp_json(fs::path(out1) / "analyze_manifest.json");
  CHECK(manifest.at("config").at("seed") == 31);
  CHECK(manifest.at("tallies").at("input") == 1100);

  const auto compare = slurp_json(compare_path);
  const auto& counts = compare.at("counts");
  CHECK(counts.at("input") == 1100);
  CHECK(counts.at("input").get<std::size_t>() ==
        counts.at("kept").get<std::size_t>() + counts.at("tie_flagged").get<std::size_t>() +
            counts.at("degenerate").get<std::size_t>());

  // bin rows partition the clean samples
  {
    std::istringstream in(slurp(bins_path));
    std::string line;
    std::getline(in, line);
    CHECK(line == "bin,ell_lo,ell_hi,count,ks,insufficient");
    std::size_t total = 0;
    while (std::getline(in, line)) {
      long bin;
      double lo, hi;
      unsigned long count;
      REQUIRE(std::sscanf(line.c_str(), "%ld,%lf,%lf,%lu,", &bin, &lo, &hi, &count) == 4);
      total += count;
    }
    CHECK(total == counts.at("kept").get<std::size_t>());
  }

  // reports are a pure function of the table: seeds and threads do not matter
  const std::string out2 = (dir / "out2").string();
  REQUIRE(run_cli("analyze --profiles " + table + " --seed 99 --threads 4 --out " + out2)
              .code == 0);
  for (const std::string suffix :
       {".compare.json", ".density.csv", ".markers.csv", ".joint.json", ".bins.csv"}) {
    CHECK(slurp(fs::path(out1) / (base + suffix)) == slurp(fs::path(out2) / (base + suffix)));
  }

  // the binary table yields byte-identical reports
  const std::string scan_bin = (dir / "scanbin").string();
  REQUIRE(run_cli("scan --dataset " + data.string() + " --queries " + queries.string() +
                  " --kx 100 --topk-format bin --out " + scan_bin)
              .code == 0);
  const std::string out3 = (dir / "out3").string();
  REQUIRE(run_cli("analyze --profiles " + (fs::path(scan_bin) / "base_top100.bin").string() +
                  " --out " + out3)
              .code == 0);
  CHECK(slurp(fs::path(out3) / (base + ".compare.json")) == slurp(compare_path));

  CHECK(run_cli("analyze --profiles " + (dir / "absent.csv").string() + " --out " +
                (dir / "oops").string())
            .code == 2);
}

TEST_SUITE_END();
