#include "mast/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "mast/doe.hpp"
#include "mast/errors.hpp"
#include "mast/metrics.hpp"
#include "mast/rng.hpp"
#include "mast/surrogate.hpp"

namespace mast::harness {

namespace {

using nlohmann::json;

constexpr std::uint64_t kObservationSalt = 0x0b5e97edULL;

const std::vector<std::string> kKnownMethods = {"mast", "hf_only", "lf_only"};

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

void require_keys(const json& object, const std::set<std::string>& allowed,
                  const std::string& where) {
  for (const auto& item : object.items())
    if (!allowed.contains(item.key()))
      throw ConfigError("config: unknown key '" + item.key() + "' in " + where);
}

}  // namespace

int thread_cap() {
  long cap = 0;
  if (const char* env = std::getenv("MAST_THREADS")) {
    char* end = nullptr;
    cap = std::strtol(env, &end, 10);
    if (end == env || cap < 0) cap = 0;
  }
  if (cap == 0) cap = static_cast<long>(std::thread::hardware_concurrency());
  return static_cast<int>(std::max(cap, 1L));
}

std::uint64_t repetition_seed(std::uint64_t base_seed, int repetition) {
  return seed_mix(base_seed, static_cast<std::uint64_t>(repetition));
}

std::uint64_t design_seed(std::uint64_t base_seed, int level, int repetition) {
  return seed_mix(base_seed, static_cast<std::uint64_t>(level),
                  static_cast<std::uint64_t>(repetition));
}

std::uint64_t observation_seed(std::uint64_t base_seed, int level, int repetition) {
  return seed_mix(seed_mix(base_seed, kObservationSalt), static_cast<std::uint64_t>(level),
                  static_cast<std::uint64_t>(repetition));
}

std::uint64_t test_set_seed(std::string_view problem_name) { return hash_string(problem_name); }

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  require_keys(j,
               {"problem", "fidelity_specs", "budget_rule", "fractions", "repetitions", "n_test",
                "base_seed", "methods", "output_dir"},
               "the top-level object");

  ExperimentConfig cfg;
  try {
    cfg.problem = j.at("problem").get<std::string>();
    if (j.contains("fidelity_specs")) {
      for (const auto& spec_json : j.at("fidelity_specs")) {
        require_keys(spec_json, {"level", "degradation_d", "cost", "noise_std"},
                     "a fidelity spec");
        bench::FidelitySpec spec;
        spec.level = spec_json.at("level").get<int>();
        spec.degradation_d = spec_json.at("degradation_d").get<double>();
        spec.cost = spec_json.at("cost").get<double>();
        // Absent noise stays NaN so resolve() can substitute the problem default.
        spec.noise_std = spec_json.contains("noise_std")
                             ? spec_json.at("noise_std").get<double>()
                             : std::numeric_limits<double>::quiet_NaN();
        cfg.fidelity_specs.push_back(spec);
      }
    }
    if (j.contains("budget_rule")) {
      const auto& rule = j.at("budget_rule");
      require_keys(rule, {"total", "multiplier"}, "budget_rule");
      if (rule.contains("total")) cfg.budget_total = rule.at("total").get<double>();
      if (rule.contains("multiplier")) cfg.budget_multiplier = rule.at("multiplier").get<double>();
    }
    if (j.contains("fractions")) cfg.fractions = j.at("fractions").get<std::vector<double>>();
    if (j.contains("repetitions")) cfg.repetitions = j.at("repetitions").get<int>();
    if (j.contains("n_test")) cfg.n_test = j.at("n_test").get<long>();
    if (j.contains("base_seed")) cfg.base_seed = j.at("base_seed").get<std::uint64_t>();
    if (j.contains("methods")) cfg.methods = j.at("methods").get<std::vector<std::string>>();
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig config_from_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream buffer;
  buffer << is.rdbuf();
  return config_from_json(buffer.str());
}

ResolvedConfig resolve(const ExperimentConfig& input) {
  ResolvedConfig r;
  r.config = input;
  auto& cfg = r.config;
  r.problem = &bench::find_problem(cfg.problem);
  const int dim = r.problem->dimension;

  if (cfg.budget_total && cfg.budget_multiplier)
    throw ConfigError("config: budget_rule must set either total or multiplier, not both");
  r.budget = cfg.budget_total ? *cfg.budget_total
                              : (cfg.budget_multiplier ? *cfg.budget_multiplier : 1.0) * 5.0 *
                                    static_cast<double>(dim);
  if (!(r.budget > 0.0)) throw ConfigError("config: budget must be positive");

  if (cfg.fidelity_specs.empty()) {
    // Two-fidelity defaults: full-accuracy level plus one degraded level.
    cfg.fidelity_specs = {{2, 0.0, 1.0, r.problem->noise_std.back()},
                          {1, 1.0, 0.1, r.problem->noise_std.front()}};
  }
  auto& specs = cfg.fidelity_specs;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (std::isnan(specs[i].noise_std))
      specs[i].noise_std = i + 1 == specs.size() ? r.problem->noise_std.front() : 0.0;
    if (specs[i].noise_std < 0.0) throw ConfigError("config: negative noise_std");
    if (specs[i].cost <= 0.0) throw ConfigError("config: costs must be positive");
    if (specs[i].degradation_d < 0.0) throw ConfigError("config: negative degradation");
  }
  if (specs.size() < 2) throw ConfigError("config: at least two fidelity levels required");
  if (specs.front().degradation_d != 0.0)
    throw ConfigError("config: the highest fidelity must have degradation 0");
  for (std::size_t i = 0; i + 1 < specs.size(); ++i) {
    if (specs[i].level <= specs[i + 1].level)
      throw ConfigError("config: fidelity_specs must be ordered highest level first");
    if (specs[i].cost <= specs[i + 1].cost)
      throw ConfigError("config: costs must strictly decrease after the highest fidelity");
  }

  if (cfg.fractions.empty()) {
    if (specs.size() == 2)
      cfg.fractions = {0.7, 0.3};
    else if (specs.size() == 3)
      cfg.fractions = {0.5, 0.3, 0.2};
    else
      throw ConfigError("config: fractions required for more than three levels");
  }
  if (cfg.fractions.size() != specs.size())
    throw ConfigError("config: fractions must match fidelity_specs in length");
  double frac_sum = 0.0;
  for (double f : cfg.fractions) {
    if (f < 0.0) throw ConfigError("config: fractions must be non-negative");
    frac_sum += f;
  }
  if (std::abs(frac_sum - 1.0) > 1e-12) throw ConfigError("config: fractions must sum to 1");

  if (cfg.repetitions < 1) throw ConfigError("config: repetitions must be positive");
  if (cfg.n_test < 1) throw ConfigError("config: n_test must be positive");
  if (cfg.methods.empty()) throw ConfigError("config: at least one method required");
  for (const auto& m : cfg.methods) {
    if (std::find(kKnownMethods.begin(), kKnownMethods.end(), m) == kKnownMethods.end())
      throw ConfigError("config: unknown method '" + m + "'");
    if (std::count(cfg.methods.begin(), cfg.methods.end(), m) != 1)
      throw ConfigError("config: duplicate method '" + m + "'");
  }

  // Canonical string drives the block digest; doubles keep full precision.
  std::ostringstream canon;
  canon << "problem=" << cfg.problem << ";budget=" << format_double(r.budget) << ";specs=";
  for (const auto& s : specs)
    canon << s.level << ':' << format_double(s.degradation_d) << ':' << format_double(s.cost)
          << ':' << format_double(s.noise_std) << ',';
  canon << ";fractions=";
  for (double f : cfg.fractions) canon << format_double(f) << ',';
  canon << ";repetitions=" << cfg.repetitions << ";n_test=" << cfg.n_test
        << ";base_seed=" << cfg.base_seed << ";methods=";
  for (const auto& m : cfg.methods) canon << m << ',';
  r.digest = hex64(hash_string(canon.str()));
  return r;
}

SweepSpec::Kind sweep_kind_from_string(const std::string& name) {
  if (name == "allocation") return SweepSpec::Kind::allocation;
  if (name == "budget") return SweepSpec::Kind::budget_scale;
  if (name == "discrepancy") return SweepSpec::Kind::discrepancy;
  throw ConfigError("sweep: unknown kind '" + name + "'");
}

TestSet make_test_set(const bench::BenchmarkProblem& problem, long n_test) {
  TestSet ts;
  ts.inputs = doe::lhs(n_test, problem.lower, problem.upper, test_set_seed(problem.name));
  ts.truth.resize(n_test);
  for (long i = 0; i < n_test; ++i)
    ts.truth[i] = bench::eval_hf(problem, ts.inputs.row(i).transpose());
  ts.digest = hash_bytes(
      ts.inputs.data(), sizeof(double) * static_cast<std::size_t>(ts.inputs.size()));
  return ts;
}

namespace {

struct LevelData {
  MatrixXd inputs;
  VectorXd outputs;
};

LevelData sample_level(const ResolvedConfig& r, const bench::FidelitySpec& spec, long count,
                       int repetition) {
  LevelData data;
  const auto& problem = *r.problem;
  if (count == 0) {
    data.inputs = MatrixXd(0, problem.dimension);
    data.outputs = VectorXd(0);
    return data;
  }
  data.inputs = doe::lhs(count, problem.lower, problem.upper,
                         design_seed(r.config.base_seed, spec.level, repetition));
  data.outputs.resize(count);
  Rng rng(observation_seed(r.config.base_seed, spec.level, repetition));
  for (long i = 0; i < count; ++i)
    data.outputs[i] = bench::sample_observation(problem, data.inputs.row(i).transpose(), spec, rng);
  return data;
}

RepRecord run_method(const ResolvedConfig& r, const TestSet& test_set, const std::string& method,
                     int repetition) {
  const auto& cfg = r.config;
  const auto& problem = *r.problem;
  const auto& specs = cfg.fidelity_specs;
  const std::size_t m = specs.size();

  RepRecord rec;
  rec.method = method;
  rec.repetition = repetition;
  rec.seed = repetition_seed(cfg.base_seed, repetition);
  rec.n_test = cfg.n_test;
  rec.budget = r.budget;
  rec.counts.assign(m, 0);
  rec.test_digest = test_set.digest;

  try {
    gp::Prediction pred;
    if (method == "mast") {
      VectorXd fractions(m), costs(m);
      for (std::size_t i = 0; i < m; ++i) {
        fractions[static_cast<Eigen::Index>(i)] = cfg.fractions[i];
        costs[static_cast<Eigen::Index>(i)] = specs[i].cost;
      }
      const auto plan = doe::allocate_budget(r.budget, fractions, costs);
      rec.cost_used = plan.cost_used();

      std::vector<FidelityDataset> datasets;
      for (std::size_t i = 0; i < m; ++i) {
        rec.counts[i] = plan.counts[i];
        auto level = sample_level(r, specs[i], plan.counts[i], repetition);
        datasets.push_back(
            {specs[i].level, std::move(level.inputs), std::move(level.outputs), specs[i].cost});
      }
      gp::FitOptions fit;
      auto surrogate =
          build_surrogate(std::move(datasets), problem.lower, problem.upper, fit, rec.seed);
      pred = surrogate.predict(test_set.inputs);
    } else {
      // Single-fidelity baseline: the entire budget spent at one level.
      const std::size_t idx = method == "hf_only" ? 0 : m - 1;
      const auto& spec = specs[idx];
      const long count = static_cast<long>(std::floor(r.budget / spec.cost));
      if (count < 2)
        throw AllocationError("baseline: budget affords fewer than two points at level " +
                              std::to_string(spec.level));
      rec.counts[idx] = count;
      rec.cost_used = static_cast<double>(count) * spec.cost;

      auto level = sample_level(r, spec, count, repetition);
      InputNormalizer normalizer(problem.lower, problem.upper);
      gp::FitOptions fit;
      fit.seed = seed_mix(rec.seed, hash_string(method));
      auto model = gp::fit_gp(normalizer.normalize(level.inputs), level.outputs, fit);
      pred = model.predict(normalizer.normalize(test_set.inputs));
    }
    rec.rmse = metrics::rmse(pred.mean, test_set.truth);
    rec.mean_pdf = metrics::mean_pdf(pred.mean, pred.variance, test_set.truth);
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.ok = false;
    std::string msg = e.what();
    for (char& c : msg)
      if (c == ',' || c == '\n') c = ';';
    rec.error = msg;
  }
  return rec;
}

void write_block_file(const BlockResult& block) {
  const auto& r = block.resolved;
  const auto& cfg = r.config;
  std::ostringstream os;
  os << "# mast-results v1 digest=" << r.digest << " problem=" << cfg.problem
     << " budget=" << format_double(r.budget) << " fractions=";
  for (std::size_t i = 0; i < cfg.fractions.size(); ++i)
    os << (i ? "|" : "") << format_double(cfg.fractions[i]);
  os << " specs=";
  for (std::size_t i = 0; i < cfg.fidelity_specs.size(); ++i) {
    const auto& s = cfg.fidelity_specs[i];
    os << (i ? "|" : "") << s.level << ':' << format_double(s.degradation_d) << ':'
       << format_double(s.cost) << ':' << format_double(s.noise_std);
  }
  os << " methods=";
  for (std::size_t i = 0; i < cfg.methods.size(); ++i) os << (i ? "|" : "") << cfg.methods[i];
  os << " repetitions=" << cfg.repetitions << " n_test=" << cfg.n_test
     << " base_seed=" << cfg.base_seed
     << " sweep=" << (r.sweep_kind.empty() ? "none" : r.sweep_kind)
     << " sweep_value=" << format_double(r.sweep_value) << "\n";
  os << "method,repetition,seed,status,rmse,mean_pdf,n_test,budget,cost_used,counts,test_digest,"
        "error\n";
  for (const auto& rec : block.records) {
    os << rec.method << ',' << rec.repetition << ',' << rec.seed << ','
       << (rec.ok ? "ok" : "failed") << ',' << format_double(rec.rmse) << ','
       << format_double(rec.mean_pdf) << ',' << rec.n_test << ',' << format_double(rec.budget)
       << ',' << format_double(rec.cost_used) << ',';
    for (std::size_t i = 0; i < rec.counts.size(); ++i) os << (i ? "|" : "") << rec.counts[i];
    os << ',' << hex64(rec.test_digest) << ',' << rec.error << "\n";
  }

  std::ofstream file(block.file, std::ios::binary);
  if (!file) throw std::runtime_error("run: cannot write " + block.file.string());
  file << os.str();
}

BlockResult run_resolved(const ResolvedConfig& resolved) {
  const auto& cfg = resolved.config;
  const TestSet test_set = make_test_set(*resolved.problem, cfg.n_test);

  std::vector<std::vector<RepRecord>> per_rep(cfg.repetitions);
  const int workers = std::min(thread_cap(), cfg.repetitions);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int rep = next.fetch_add(1);
      if (rep >= cfg.repetitions) return;
      per_rep[rep] = run_repetition(resolved, test_set, rep);
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  BlockResult block;
  block.resolved = resolved;
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi)
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
      block.records.push_back(per_rep[rep][mi]);
      if (!per_rep[rep][mi].ok) ++block.failed;
    }

  std::filesystem::create_directories(cfg.output_dir);
  std::string name = "block_" + cfg.problem + "_" + resolved.digest;
  // Sweep annotations are not part of the config digest; suffix them so a
  // grid point that resolves to the same config as a plain run cannot
  // overwrite the plain run's block.
  if (!resolved.sweep_kind.empty())
    name += "_" + resolved.sweep_kind + "_" + format_double(resolved.sweep_value);
  block.file = std::filesystem::path(cfg.output_dir) / (name + ".csv");
  write_block_file(block);
  return block;
}

}  // namespace

std::vector<RepRecord> run_repetition(const ResolvedConfig& resolved, const TestSet& test_set,
                                      int repetition) {
  std::vector<RepRecord> records;
  for (const auto& method : resolved.config.methods)
    records.push_back(run_method(resolved, test_set, method, repetition));
  return records;
}

BlockResult run_experiment(const ExperimentConfig& config) { return run_resolved(resolve(config)); }

std::vector<BlockResult> run_sweep(const ExperimentConfig& config, const SweepSpec& sweep) {
  if (sweep.grid.empty()) throw ConfigError("sweep: empty grid");
  std::vector<BlockResult> blocks;
  for (double value : sweep.grid) {
    ExperimentConfig cfg = config;
    std::string kind;
    switch (sweep.kind) {
      case SweepSpec::Kind::allocation: {
        kind = "allocation";
        if (!(value > 0.0 && value <= 1.0))
          throw ConfigError("sweep: allocation fractions must lie in (0, 1]");
        ResolvedConfig probe = resolve(cfg);
        if (probe.config.fidelity_specs.size() != 2)
          throw ConfigError("sweep: allocation sweep requires exactly two fidelity levels");
        cfg.fidelity_specs = probe.config.fidelity_specs;
        cfg.fractions = {value, 1.0 - value};
        break;
      }
      case SweepSpec::Kind::budget_scale: {
        kind = "budget";
        if (!(value > 0.0)) throw ConfigError("sweep: budget scales must be positive");
        cfg.budget_total.reset();
        cfg.budget_multiplier = value;
        break;
      }
      case SweepSpec::Kind::discrepancy: {
        kind = "discrepancy";
        if (value < 0.0) throw ConfigError("sweep: degradation values must be non-negative");
        ResolvedConfig probe = resolve(cfg);
        cfg.fidelity_specs = probe.config.fidelity_specs;
        cfg.fidelity_specs.back().degradation_d = value;  // lowest fidelity
        break;
      }
    }
    ResolvedConfig resolved = resolve(cfg);
    resolved.sweep_kind = kind;
    resolved.sweep_value = value;
    blocks.push_back(run_resolved(resolved));
  }
  return blocks;
}

// ---------------------------------------------------------------------------
// Aggregation

namespace {

struct ParsedBlock {
  std::string problem;
  std::string sweep_kind;  // "none" normalized to empty
  double sweep_value = 0.0;
  std::string digest;
  std::vector<RepRecord> records;
};

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::map<std::string, std::string> parse_header_fields(const std::string& header) {
  std::map<std::string, std::string> fields;
  for (const auto& token : split(header, ' ')) {
    const auto eq = token.find('=');
    if (eq != std::string::npos) fields[token.substr(0, eq)] = token.substr(eq + 1);
  }
  return fields;
}

std::optional<ParsedBlock> parse_block_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) return std::nullopt;
  std::string header;
  if (!std::getline(is, header) || header.rfind("# mast-results v1 ", 0) != 0) return std::nullopt;

  ParsedBlock block;
  auto fields = parse_header_fields(header);
  block.problem = fields["problem"];
  block.digest = fields["digest"];
  block.sweep_kind = fields["sweep"] == "none" ? "" : fields["sweep"];
  block.sweep_value = std::strtod(fields["sweep_value"].c_str(), nullptr);

  std::string line;
  std::getline(is, line);  // column header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cols = split(line, ',');
    if (cols.size() < 12) continue;
    RepRecord rec;
    rec.method = cols[0];
    rec.repetition = static_cast<int>(std::strtol(cols[1].c_str(), nullptr, 10));
    rec.seed = std::strtoull(cols[2].c_str(), nullptr, 10);
    rec.ok = cols[3] == "ok";
    rec.rmse = std::strtod(cols[4].c_str(), nullptr);
    rec.mean_pdf = std::strtod(cols[5].c_str(), nullptr);
    rec.n_test = std::strtol(cols[6].c_str(), nullptr, 10);
    rec.budget = std::strtod(cols[7].c_str(), nullptr);
    rec.cost_used = std::strtod(cols[8].c_str(), nullptr);
    for (const auto& c : split(cols[9], '|'))
      rec.counts.push_back(std::strtol(c.c_str(), nullptr, 10));
    rec.test_digest = std::strtoull(cols[10].c_str(), nullptr, 16);
    rec.error = cols[11];
    block.records.push_back(std::move(rec));
  }
  return block;
}

std::string opt_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

}  // namespace

ReportResult write_report(const std::filesystem::path& directory) {
  std::vector<ParsedBlock> blocks;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(directory))
    if (entry.is_regular_file() && entry.path().filename().string().rfind("block_", 0) == 0 &&
        entry.path().extension() == ".csv")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files)
    if (auto block = parse_block_file(f)) blocks.push_back(std::move(*block));
  if (blocks.empty()) throw ReportError("report: no result blocks under " + directory.string());

  std::sort(blocks.begin(), blocks.end(), [](const ParsedBlock& a, const ParsedBlock& b) {
    return std::tie(a.problem, a.sweep_kind, a.sweep_value, a.digest) <
           std::tie(b.problem, b.sweep_kind, b.sweep_value, b.digest);
  });

  ReportResult result;
  for (const auto& block : blocks) {
    // Per-method metric lists over successful repetitions.
    std::map<std::string, std::vector<double>> rmse_by, pdf_by;
    std::map<std::string, std::map<int, const RepRecord*>> by_rep;
    std::map<std::string, long> failed_by;
    std::vector<std::string> method_order;
    for (const auto& rec : block.records) {
      if (std::find(method_order.begin(), method_order.end(), rec.method) == method_order.end())
        method_order.push_back(rec.method);
      if (!rec.ok) {
        ++failed_by[rec.method];
        continue;
      }
      rmse_by[rec.method].push_back(rec.rmse);
      pdf_by[rec.method].push_back(rec.mean_pdf);
      by_rep[rec.method][rec.repetition] = &rec;
    }

    const bool has_baseline = rmse_by.contains("hf_only") && !rmse_by["hf_only"].empty();
    if (!has_baseline) result.baseline_missing = true;
    metrics::Summary base_rmse, base_pdf;
    if (has_baseline) {
      base_rmse = metrics::summarize(rmse_by["hf_only"]);
      base_pdf = metrics::summarize(pdf_by["hf_only"]);
    }

    for (const auto& method : method_order) {
      SummaryRow row;
      row.problem = block.problem;
      row.sweep_kind = block.sweep_kind;
      row.sweep_value = block.sweep_value;
      row.method = method;
      row.n_failed = failed_by.contains(method) ? failed_by[method] : 0;
      if (!rmse_by.contains(method) || rmse_by[method].empty()) {
        result.rows.push_back(row);
        continue;
      }
      const auto rmse_summary = metrics::summarize(rmse_by[method]);
      const auto pdf_summary = metrics::summarize(pdf_by[method]);
      row.n_ok = rmse_summary.count;
      row.rmse_mean = rmse_summary.mean;
      row.rmse_median = rmse_summary.median;
      row.rmse_iqr = rmse_summary.iqr;
      row.pdf_mean = pdf_summary.mean;
      row.pdf_median = pdf_summary.median;
      row.pdf_iqr = pdf_summary.iqr;
      if (has_baseline) {
        row.norm_rmse = metrics::normalize(rmse_summary.mean, base_rmse.mean);
        row.norm_pdf = metrics::normalize(pdf_summary.mean, base_pdf.mean);
        // Seed-paired ratios over repetitions where both methods succeeded.
        std::vector<double> rmse_ratios, pdf_ratios;
        for (const auto& [rep, rec] : by_rep[method]) {
          auto it = by_rep["hf_only"].find(rep);
          if (it == by_rep["hf_only"].end()) continue;
          if (it->second->rmse > 0.0) rmse_ratios.push_back(rec->rmse / it->second->rmse);
          if (it->second->mean_pdf > 0.0)
            pdf_ratios.push_back(rec->mean_pdf / it->second->mean_pdf);
        }
        if (!rmse_ratios.empty()) row.norm_rmse_paired = metrics::summarize(rmse_ratios).mean;
        if (!pdf_ratios.empty()) row.norm_pdf_paired = metrics::summarize(pdf_ratios).mean;
      }
      result.rows.push_back(row);
    }
  }

  result.summary_csv = directory / "summary.csv";
  {
    std::ostringstream os;
    os << "problem,sweep,sweep_value,method,n_ok,n_failed,rmse_mean,rmse_median,rmse_iqr,"
          "pdf_mean,pdf_median,pdf_iqr,norm_rmse,norm_pdf,norm_rmse_paired,norm_pdf_paired,"
          "baseline_missing\n";
    for (const auto& row : result.rows) {
      const bool missing = !row.norm_rmse.has_value();
      os << row.problem << ',' << (row.sweep_kind.empty() ? "none" : row.sweep_kind) << ','
         << format_double(row.sweep_value) << ',' << row.method << ',' << row.n_ok << ','
         << row.n_failed << ',' << format_double(row.rmse_mean) << ','
         << format_double(row.rmse_median) << ',' << format_double(row.rmse_iqr) << ','
         << format_double(row.pdf_mean) << ',' << format_double(row.pdf_median) << ','
         << format_double(row.pdf_iqr) << ',' << opt_field(row.norm_rmse) << ','
         << opt_field(row.norm_pdf) << ',' << opt_field(row.norm_rmse_paired) << ','
         << opt_field(row.norm_pdf_paired) << ',' << (missing ? "yes" : "no") << "\n";
    }
    std::ofstream file(result.summary_csv, std::ios::binary);
    file << os.str();
  }

  result.summary_txt = directory / "summary.txt";
  {
    std::ostringstream os;
    os << "result summary (" << blocks.size() << " block" << (blocks.size() == 1 ? "" : "s")
       << ")\n";
    for (const auto& row : result.rows) {
      os << row.problem;
      if (!row.sweep_kind.empty())
        os << " [" << row.sweep_kind << "=" << format_double(row.sweep_value) << "]";
      os << " " << row.method << ": ok=" << row.n_ok << " failed=" << row.n_failed
         << " rmse(mean=" << format_double(row.rmse_mean)
         << ", median=" << format_double(row.rmse_median)
         << ", iqr=" << format_double(row.rmse_iqr)
         << ") mean_pdf(mean=" << format_double(row.pdf_mean)
         << ", median=" << format_double(row.pdf_median)
         << ", iqr=" << format_double(row.pdf_iqr) << ")";
      if (row.norm_rmse)
        os << " normalized(rmse=" << format_double(*row.norm_rmse)
           << ", mean_pdf=" << format_double(*row.norm_pdf) << ")";
      else
        os << " normalized: unavailable (no hf_only baseline in block)";
      os << "\n";
    }
    std::ofstream file(result.summary_txt, std::ios::binary);
    file << os.str();
  }

  // Sweep curves: rows of (grid value, method, normalized metric, dispersion).
  std::set<std::string> kinds;
  for (const auto& row : result.rows)
    if (!row.sweep_kind.empty()) kinds.insert(row.sweep_kind);
  for (const auto& kind : kinds) {
    const auto path = directory / ("sweep_" + kind + ".csv");
    std::ostringstream os;
    os << "sweep,grid_value,method,norm_rmse,norm_pdf,rmse_iqr_norm,pdf_iqr_norm\n";
    for (const auto& row : result.rows) {
      if (row.sweep_kind != kind || row.n_ok == 0) continue;
      os << kind << ',' << format_double(row.sweep_value) << ',' << row.method << ','
         << opt_field(row.norm_rmse) << ',' << opt_field(row.norm_pdf) << ','
         << (row.norm_rmse ? format_double(row.rmse_iqr * *row.norm_rmse / row.rmse_mean)
                           : std::string())
         << ','
         << (row.norm_pdf ? format_double(row.pdf_iqr * *row.norm_pdf / row.pdf_mean)
                          : std::string())
         << "\n";
    }
    std::ofstream file(path, std::ios::binary);
    file << os.str();
    result.sweep_files.push_back(path);
  }
  return result;
}

}  // namespace mast::harness
