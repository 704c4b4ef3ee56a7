#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "mast/benchmarks.hpp"
#include "mast/errors.hpp"
#include "mast/harness.hpp"

// Command-line front end for the experiment harness.
//
// Exit codes: 0 success, 1 configuration error, 2 partial failures occurred
// (some repetitions were recorded as failed but the run completed).

namespace {

int run_command(const std::string& config_path) {
  auto config = mast::harness::config_from_file(config_path);
  auto block = mast::harness::run_experiment(config);
  std::printf("wrote %s (%d failed of %zu records)\n", block.file.string().c_str(), block.failed,
              block.records.size());
  return block.failed > 0 ? 2 : 0;
}

int sweep_command(const std::string& config_path, const std::string& kind_name,
                  const std::vector<double>& grid) {
  auto config = mast::harness::config_from_file(config_path);
  mast::harness::SweepSpec sweep;
  sweep.kind = mast::harness::sweep_kind_from_string(kind_name);
  sweep.grid = grid;
  auto blocks = mast::harness::run_sweep(config, sweep);
  int failed = 0;
  for (const auto& block : blocks) {
    std::printf("wrote %s (%d failed)\n", block.file.string().c_str(), block.failed);
    failed += block.failed;
  }
  return failed > 0 ? 2 : 0;
}

int report_command(const std::string& directory) {
  auto report = mast::harness::write_report(directory);
  std::printf("wrote %s\n", report.summary_csv.string().c_str());
  std::printf("wrote %s\n", report.summary_txt.string().c_str());
  for (const auto& f : report.sweep_files) std::printf("wrote %s\n", f.string().c_str());
  if (report.baseline_missing)
    std::printf("warning: some blocks lack hf_only records; normalized columns omitted there\n");
  return 0;
}

int list_command() {
  for (const auto& p : mast::bench::catalog())
    std::printf("%-12s %2dD  %s\n", p.name.c_str(), p.dimension,
                std::string(mast::bench::to_string(p.discrepancy_kind)).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mast: multi-fidelity surrogate benchmarks"};
  app.require_subcommand(1);

  std::string config_path, sweep_kind, report_dir;
  std::vector<double> grid;

  auto* run = app.add_subcommand("run", "run one experiment block from a config file");
  run->add_option("--config", config_path, "JSON config path")->required();

  auto* sweep = app.add_subcommand("sweep", "run an experiment block per grid value");
  sweep->add_option("--config", config_path, "JSON config path")->required();
  sweep->add_option("--kind", sweep_kind, "allocation | budget | discrepancy")->required();
  sweep->add_option("--grid", grid, "comma-separated grid values")
      ->required()
      ->delimiter(',');

  auto* report = app.add_subcommand("report", "aggregate result blocks in a directory");
  report->add_option("--dir", report_dir, "directory holding block_*.csv files")->required();

  app.add_subcommand("list-problems", "print the benchmark catalog");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) return run_command(config_path);
    if (sweep->parsed()) return sweep_command(config_path, sweep_kind, grid);
    if (report->parsed()) return report_command(report_dir);
    return list_command();
  } catch (const mast::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
