#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mast/benchmarks.hpp"

// Experiment runner: seeded repetitions of surrogate fits against the
// benchmark catalog, persisted as diffable comma-separated blocks, plus
// sweep drivers and aggregation into summary tables.

namespace mast::harness {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct ExperimentConfig {
  std::string problem;
  // Ordered from the highest fidelity down (matching how splits like 70/30
  // HF/LF are quoted); empty selects the problem's two-fidelity defaults.
  std::vector<bench::FidelitySpec> fidelity_specs;
  // Exactly one of these may be set; neither means multiplier = 1, i.e. the
  // base budget of five equivalent high-fidelity evaluations per dimension.
  std::optional<double> budget_total;
  std::optional<double> budget_multiplier;
  std::vector<double> fractions;  // aligned with fidelity_specs
  int repetitions = 25;
  long n_test = 1000;
  std::uint64_t base_seed = 0;
  std::vector<std::string> methods = {"mast", "hf_only"};
  std::string output_dir = "results";
};

/// Parse a JSON config; keys must exactly match the field names above and
/// unknown keys are rejected.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig config_from_file(const std::filesystem::path& path);

struct ResolvedConfig {
  ExperimentConfig config;  // defaults filled in
  const bench::BenchmarkProblem* problem = nullptr;
  double budget = 0.0;
  std::string digest;      // hex digest of the canonical config string
  std::string sweep_kind;  // empty outside sweeps
  double sweep_value = 0.0;
};

/// Validate and fill defaults (fidelity specs, fractions, budget, noise).
ResolvedConfig resolve(const ExperimentConfig& config);

struct SweepSpec {
  enum class Kind { allocation, budget_scale, discrepancy };
  Kind kind = Kind::allocation;
  std::vector<double> grid;
};

SweepSpec::Kind sweep_kind_from_string(const std::string& name);

struct RepRecord {
  std::string method;
  int repetition = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double rmse = 0.0;
  double mean_pdf = 0.0;
  long n_test = 0;
  double budget = 0.0;
  double cost_used = 0.0;
  std::vector<long> counts;  // per fidelity spec, highest first
  std::uint64_t test_digest = 0;
};

struct BlockResult {
  ResolvedConfig resolved;
  std::vector<RepRecord> records;  // grouped by method, repetitions ascending
  std::filesystem::path file;
  int failed = 0;
};

// Seed derivations; fixed so that records are reproducible independently of
// execution order and of which other methods run.
std::uint64_t repetition_seed(std::uint64_t base_seed, int repetition);
std::uint64_t design_seed(std::uint64_t base_seed, int level, int repetition);
std::uint64_t observation_seed(std::uint64_t base_seed, int level, int repetition);
std::uint64_t test_set_seed(std::string_view problem_name);

struct TestSet {
  MatrixXd inputs;
  VectorXd truth;
  std::uint64_t digest = 0;
};

/// Fixed per-problem evaluation set shared by every method and repetition.
TestSet make_test_set(const bench::BenchmarkProblem& problem, long n_test);

/// One repetition of every configured method; independent of all other
/// repetitions, so callers may execute repetitions in any order.
std::vector<RepRecord> run_repetition(const ResolvedConfig& resolved, const TestSet& test_set,
                                      int repetition);

/// Run all repetitions (parallelism capped by MAST_THREADS) and persist one
/// comma-separated block file under output_dir.
BlockResult run_experiment(const ExperimentConfig& config);

/// Allocation, budget-scale or discrepancy sweep: one experiment block per
/// grid value.
std::vector<BlockResult> run_sweep(const ExperimentConfig& config, const SweepSpec& sweep);

struct SummaryRow {
  std::string problem;
  std::string sweep_kind;
  double sweep_value = 0.0;
  std::string method;
  long n_ok = 0;
  long n_failed = 0;
  double rmse_mean = 0.0, rmse_median = 0.0, rmse_iqr = 0.0;
  double pdf_mean = 0.0, pdf_median = 0.0, pdf_iqr = 0.0;
  // Ratios against the hf_only aggregate of the same block; absent when the
  // block carries no baseline records.
  std::optional<double> norm_rmse;
  std::optional<double> norm_pdf;
  // Seed-paired alternative: mean of per-repetition ratios.
  std::optional<double> norm_rmse_paired;
  std::optional<double> norm_pdf_paired;
};

struct ReportResult {
  std::vector<SummaryRow> rows;
  bool baseline_missing = false;  // some block lacked hf_only records
  std::filesystem::path summary_csv;
  std::filesystem::path summary_txt;
  std::vector<std::filesystem::path> sweep_files;
};

/// Aggregate every block file under the directory into summary tables and
/// sweep-curve data files.
ReportResult write_report(const std::filesystem::path& directory);

/// Parallelism cap from MAST_THREADS (0 or unset = hardware concurrency).
int thread_cap();

}  // namespace mast::harness
