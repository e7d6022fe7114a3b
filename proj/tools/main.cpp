// rankshift: nearest-neighbor rank-shift analysis tool.
//
// Subcommands:
//   scan      exhaustive top-k search over a vector dataset
//   theory    tabulate model cdf/pdf curves and their summary markers
//   validate  synthetic end-to-end check of the model against simulation
//   analyze   measure deltas from a scan output and compare to the model
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rankshift/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"nearest-neighbor rank-shift analysis"};
  app.set_version_flag("--version", std::string(rankshift::kVersion));
  app.require_subcommand(1);

  rankshift::RunConfig config;
  std::string seed_text;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", config.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--threads", config.threads, "worker threads")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--seed", config.seed, "RNG seed (generated when omitted)");
  };
  auto add_ranks = [&](CLI::App* cmd) {
    cmd->add_option("--kt", config.k_t, "target rank")->capture_default_str();
    cmd->add_option("--kx", config.k_x, "neighborhood rank")->capture_default_str();
  };

  CLI::App* scan = app.add_subcommand("scan", "exhaustive top-k search");
  scan->add_option("--dataset", config.dataset_path, "dataset vector file")->required();
  scan->add_option("--queries", config.queries_path, "query vector file")->required();
  scan->add_option("--format", config.format, "fvecs|bvecs|fbin|u8bin")->capture_default_str();
  scan->add_option("--kx", config.k_x, "neighbors per query")->capture_default_str();
  scan->add_flag("--exclude-self-matches", config.exclude_self_matches,
                 "skip all zero-distance hits (query present in the dataset)");
  scan->add_option("--topk-format", config.topk_format, "csv|bin")->capture_default_str();
  add_common(scan);

  CLI::App* theory = app.add_subcommand("theory", "tabulate model curves");
  add_ranks(theory);
  theory->add_option("--lids", config.lids, "index values, comma separated")
      ->required()
      ->delimiter(',');
  add_common(theory);

  CLI::App* validate = app.add_subcommand("validate", "synthetic model validation");
  add_ranks(validate);
  validate->add_option("--lid0", config.lid0, "normalization target index")
      ->capture_default_str();
  validate->add_option("--law", config.law, "power:<ell> or chi:<dim>")->capture_default_str();
  validate->add_option("--n-sweep", config.n_sweep, "dataset sizes, comma separated")
      ->delimiter(',')
      ->capture_default_str();
  validate->add_option("--replicates", config.replicates, "neighborhoods per sweep point")
      ->capture_default_str();
  validate->add_option("--assume-lid", config.assume_lid,
                       "compare against this index instead of the law's own");
  add_common(validate);

  CLI::App* analyze = app.add_subcommand("analyze", "measure and compare a scan output");
  analyze->add_option("--profiles", config.profiles_path, "scan output (.csv or .bin)")
      ->required();
  add_ranks(analyze);
  analyze->add_option("--lid0", config.lid0, "normalization target index")
      ->capture_default_str();
  analyze->add_option("--bin-width", config.bin_width, "index bin width for the per-bin study")
      ->capture_default_str();
  add_common(analyze);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? rankshift::kExitSuccess : rankshift::kExitUsage;
  }

  return rankshift::dispatch(app.get_subcommands().front()->get_name(), config);
}
