#include "mast/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mast/errors.hpp"
#include "mast/rng.hpp"

namespace mast {

namespace {

constexpr std::uint64_t kStage1Salt = 0x5354414745315341ULL;
constexpr std::uint64_t kStage2Salt = 0x5354414745325341ULL;
constexpr std::uint64_t kStage3Salt = 0x5354414745335341ULL;

double clamp01(double x) { return std::min(std::max(x, 0.0), 1.0); }

}  // namespace

std::uint64_t stage1_seed(std::uint64_t build_seed, int level) {
  return seed_mix(build_seed, kStage1Salt, static_cast<std::uint64_t>(level));
}

std::uint64_t stage2_seed(std::uint64_t build_seed, int level) {
  return seed_mix(build_seed, kStage2Salt, static_cast<std::uint64_t>(level));
}

std::uint64_t stage3_seed(std::uint64_t build_seed) { return seed_mix(build_seed, kStage3Salt); }

InputNormalizer::InputNormalizer(VectorXd lower, VectorXd upper)
    : lower_(std::move(lower)), span_(upper - lower_) {
  if (lower_.size() != span_.size()) throw std::invalid_argument("normalizer: bounds mismatch");
  for (Eigen::Index j = 0; j < span_.size(); ++j) {
    if (span_[j] < 0.0) throw std::invalid_argument("normalizer: upper bound below lower bound");
    if (span_[j] == 0.0) span_[j] = 1.0;  // degenerate dimension: shift only
  }
}

MatrixXd InputNormalizer::normalize(const MatrixXd& rows) const {
  if (rows.cols() != lower_.size())
    throw std::invalid_argument("normalizer: point dimension mismatch");
  return (rows.rowwise() - lower_.transpose()).array().rowwise() /
         span_.transpose().array();
}

double alpha_exponent(double cost_ratio) {
  if (!(cost_ratio > 1.0))
    throw ConfigError("alpha_exponent: cost ratio must exceed 1 (costs must strictly increase)");
  return std::log10(cost_ratio) / 2.0;
}

double trust_radius(double d_min) {
  if (d_min < 0.0) throw std::invalid_argument("trust_radius: negative distance");
  return std::sqrt(d_min);
}

TrustWeight local_weight(const VectorXd& point, const MatrixXd& hf_points, double alpha) {
  const Eigen::Index n = hf_points.rows();
  if (n == 0) throw std::invalid_argument("local_weight: empty high-fidelity set");
  if (hf_points.cols() != point.size())
    throw std::invalid_argument("local_weight: dimension mismatch");

  TrustWeight tw;
  tw.alpha = alpha;

  VectorXd dist(n);
  for (Eigen::Index j = 0; j < n; ++j)
    dist[j] = (hf_points.row(j).transpose() - point).norm();
  Eigen::Index nearest = 0;
  tw.d_min = dist.minCoeff(&nearest);
  tw.radius = trust_radius(tw.d_min);

  double sum = 0.0;
  bool nearest_included = false;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (dist[j] <= tw.radius) {
      sum += clamp01(1.0 - std::pow(dist[j], alpha));
      tw.neighborhood.push_back(static_cast<int>(j));
      if (j == nearest) nearest_included = true;
    }
  }
  // The nearest point falls outside its own trust region once d_min exceeds 1;
  // force-include it so the neighborhood is never empty.
  if (!nearest_included) {
    sum += clamp01(1.0 - std::pow(tw.d_min, alpha));
    tw.neighborhood.push_back(static_cast<int>(nearest));
  }
  tw.weight_W = clamp01(1.0 - sum / static_cast<double>(tw.neighborhood.size()));
  return tw;
}

gp::TrainedGp fit_discrepancy(const gp::TrainedGp& lower_gp, const MatrixXd& hf_inputs_norm,
                              const VectorXd& hf_outputs, const gp::FitOptions& options) {
  const VectorXd residuals = hf_outputs - lower_gp.predict(hf_inputs_norm).mean;
  gp::FitOptions opts = options;
  opts.learn_noise = true;
  return gp::fit_gp(hf_inputs_norm, residuals, opts);
}

AugmentResult augment_point(double y, double mu_delta, double var_delta, double mu_hf,
                            double var_hf, double sigma_m_sq, double weight) {
  if (var_delta < 0.0 || var_hf < 0.0 || sigma_m_sq < 0.0)
    throw std::invalid_argument("augment_point: negative variance");
  if (weight < 0.0 || weight > 1.0)
    throw std::invalid_argument("augment_point: weight outside [0, 1]");
  AugmentResult out;
  out.value = weight * (y + mu_delta) + (1.0 - weight) * mu_hf;
  out.variance = weight * weight * (sigma_m_sq + var_delta) +
                 (1.0 - weight) * (1.0 - weight) * var_hf;
  return out;
}

gp::Prediction Surrogate::predict(const MatrixXd& queries) const {
  return fusion_gp.predict(input_normalizer.normalize(queries));
}

Surrogate build_surrogate(std::vector<FidelityDataset> datasets, const VectorXd& lower_bounds,
                          const VectorXd& upper_bounds, const gp::FitOptions& options,
                          std::uint64_t seed) {
  if (datasets.size() < 2)
    throw ConfigError("build_surrogate: at least two fidelity levels required");
  std::sort(datasets.begin(), datasets.end(),
            [](const FidelityDataset& a, const FidelityDataset& b) { return a.level < b.level; });
  for (std::size_t i = 0; i + 1 < datasets.size(); ++i) {
    if (datasets[i].level == datasets[i + 1].level)
      throw ConfigError("build_surrogate: duplicate fidelity level");
    if (!(datasets[i].cost < datasets[i + 1].cost))
      throw ConfigError("build_surrogate: costs must strictly increase with level");
  }
  const FidelityDataset& hf = datasets.back();
  const Eigen::Index n_hf = hf.inputs.rows();
  if (n_hf < 2) throw ConfigError("build_surrogate: need at least two highest-fidelity points");
  for (const auto& ds : datasets)
    if (ds.outputs.size() != ds.inputs.rows())
      throw std::invalid_argument("build_surrogate: inputs/outputs length mismatch");

  Surrogate s;
  s.input_normalizer = InputNormalizer(lower_bounds, upper_bounds);

  const std::size_t m = datasets.size();
  std::vector<MatrixXd> inputs_norm(m);
  for (std::size_t i = 0; i < m; ++i) inputs_norm[i] = s.input_normalizer.normalize(datasets[i].inputs);
  const MatrixXd& hf_norm = inputs_norm.back();

  // Stage 1: independent per-level models, recording each noise estimate.
  s.stage1_gps.resize(m);
  s.levels.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& ds = datasets[i];
    s.levels[i] = {ds.level, ds.cost, static_cast<long>(ds.inputs.rows()), 0.0};
    if (ds.inputs.rows() == 0) continue;  // degenerate empty level, skipped
    gp::FitOptions opts = options;
    opts.seed = stage1_seed(seed, ds.level);
    if (ds.inputs.rows() == 1) {
      // A single observation cannot support a noise estimate; pin it to zero.
      opts.learn_noise = false;
      opts.fixed_noise_variance = 0.0;
    } else {
      opts.learn_noise = true;
    }
    s.stage1_gps[i] = gp::fit_gp(inputs_norm[i], ds.outputs, opts);
    s.levels[i].sigma_hat_sq = s.stage1_gps[i]->noise_variance_original();
  }

  // Stage 2: every lower level is corrected directly against the highest one.
  const auto& hf_gp = *s.stage1_gps.back();
  s.discrepancy_gps.resize(m - 1);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const auto& ds = datasets[i];
    if (ds.inputs.rows() == 0) continue;
    gp::FitOptions opts = options;
    opts.seed = stage2_seed(seed, ds.level);
    opts.learn_noise = true;
    s.discrepancy_gps[i] = fit_discrepancy(*s.stage1_gps[i], hf_norm, hf.outputs, opts);

    const double alpha = alpha_exponent(hf.cost / ds.cost);
    const auto delta_pred = s.discrepancy_gps[i]->predict(inputs_norm[i]);
    const auto hf_pred = hf_gp.predict(inputs_norm[i]);
    const double sigma_m_sq = s.levels[i].sigma_hat_sq;
    for (Eigen::Index k = 0; k < ds.inputs.rows(); ++k) {
      AugmentedObservation obs;
      obs.input = inputs_norm[i].row(k).transpose();
      obs.source_level = ds.level;
      obs.trust = local_weight(obs.input, hf_norm, alpha);
      obs.trust.point_index = static_cast<int>(k);
      const auto blended =
          augment_point(ds.outputs[k], delta_pred.mean[k], delta_pred.variance[k],
                        hf_pred.mean[k], hf_pred.variance[k], sigma_m_sq, obs.trust.weight_W);
      obs.value = blended.value;
      obs.variance = blended.variance;
      s.augmented.push_back(std::move(obs));
    }
  }

  // Stage 3: pooled fit with every observation's variance held fixed.
  const Eigen::Index n_total = n_hf + static_cast<Eigen::Index>(s.augmented.size());
  MatrixXd fused_inputs(n_total, hf.inputs.cols());
  VectorXd fused_targets(n_total);
  VectorXd fused_noise(n_total);
  fused_inputs.topRows(n_hf) = hf_norm;
  fused_targets.head(n_hf) = hf.outputs;
  fused_noise.head(n_hf).setConstant(s.levels.back().sigma_hat_sq);
  for (std::size_t k = 0; k < s.augmented.size(); ++k) {
    const auto row = n_hf + static_cast<Eigen::Index>(k);
    fused_inputs.row(row) = s.augmented[k].input.transpose();
    fused_targets[row] = s.augmented[k].value;
    fused_noise[row] = s.augmented[k].variance;
  }

  gp::FitOptions fusion_opts = options;
  fusion_opts.learn_noise = false;
  fusion_opts.seed = stage3_seed(seed);
  s.fusion_gp = gp::fit_gp(fused_inputs, fused_targets, fusion_opts, fused_noise);
  return s;
}

// ---------------------------------------------------------------------------
// Persistence: line-oriented text with hex floats for exact round trips.

namespace {

constexpr const char* kFormatTag = "mast-surrogate";
constexpr int kFormatVersion = 1;

void write_double(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", v);
  os << buf;
}

void write_vector(std::ostream& os, const VectorXd& v) {
  os << v.size();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    os << ' ';
    write_double(os, v[i]);
  }
  os << '\n';
}

void write_matrix(std::ostream& os, const MatrixXd& mat) {
  os << mat.rows() << ' ' << mat.cols();
  for (Eigen::Index i = 0; i < mat.rows(); ++i)
    for (Eigen::Index j = 0; j < mat.cols(); ++j) {
      os << ' ';
      write_double(os, mat(i, j));
    }
  os << '\n';
}

double read_double(std::istream& is) {
  std::string token;
  if (!(is >> token)) throw std::runtime_error("surrogate file: unexpected end of input");
  return std::strtod(token.c_str(), nullptr);
}

VectorXd read_vector(std::istream& is) {
  Eigen::Index n = 0;
  if (!(is >> n) || n < 0) throw std::runtime_error("surrogate file: bad vector length");
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = read_double(is);
  return v;
}

MatrixXd read_matrix(std::istream& is) {
  Eigen::Index rows = 0, cols = 0;
  if (!(is >> rows >> cols) || rows < 0 || cols < 0)
    throw std::runtime_error("surrogate file: bad matrix shape");
  MatrixXd mat(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) mat(i, j) = read_double(is);
  return mat;
}

void write_gp(std::ostream& os, const gp::TrainedGp& model) {
  os << "gp\n";
  write_vector(os, model.params().lengthscales);
  os << "signal ";
  write_double(os, model.params().output_variance);
  os << ' ';
  write_double(os, model.params().noise_variance);
  os << ' ';
  write_double(os, model.output_transform().mean);
  os << ' ';
  write_double(os, model.output_transform().scale);
  os << ' ';
  write_double(os, model.jitter_used());
  os << '\n';
  write_matrix(os, model.train_inputs());
  write_vector(os, model.train_targets());
  os << (model.per_point_noise() ? 1 : 0) << '\n';
  if (model.per_point_noise()) write_vector(os, *model.per_point_noise());
  write_matrix(os, model.factor());
  write_vector(os, model.dual_weights());
}

gp::TrainedGp read_gp(std::istream& is) {
  std::string tag;
  is >> tag;
  if (tag != "gp") throw std::runtime_error("surrogate file: expected gp block");
  gp::KernelParams params;
  params.lengthscales = read_vector(is);
  is >> tag;
  if (tag != "signal") throw std::runtime_error("surrogate file: expected signal line");
  params.output_variance = read_double(is);
  params.noise_variance = read_double(is);
  gp::OutputTransform transform;
  transform.mean = read_double(is);
  transform.scale = read_double(is);
  const double jitter = read_double(is);
  MatrixXd inputs = read_matrix(is);
  VectorXd targets = read_vector(is);
  int has_noise = 0;
  is >> has_noise;
  std::optional<VectorXd> noise;
  if (has_noise) noise = read_vector(is);
  MatrixXd factor = read_matrix(is);
  VectorXd duals = read_vector(is);
  return gp::TrainedGp::from_parts(std::move(params), std::move(inputs), std::move(targets),
                                   std::move(noise), transform, std::move(factor),
                                   std::move(duals), jitter);
}

}  // namespace

void save_surrogate(const Surrogate& surrogate, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_surrogate: cannot open " + path.string());
  os << kFormatTag << " v" << kFormatVersion << '\n';
  write_vector(os, surrogate.input_normalizer.lower());
  write_vector(os, surrogate.input_normalizer.span());

  os << "levels " << surrogate.levels.size() << '\n';
  for (const auto& lv : surrogate.levels) {
    os << lv.level << ' ' << lv.count << ' ';
    write_double(os, lv.cost);
    os << ' ';
    write_double(os, lv.sigma_hat_sq);
    os << '\n';
  }

  auto write_optional_gp = [&os](const std::optional<gp::TrainedGp>& model) {
    os << (model ? 1 : 0) << '\n';
    if (model) write_gp(os, *model);
  };
  os << "stage1 " << surrogate.stage1_gps.size() << '\n';
  for (const auto& model : surrogate.stage1_gps) write_optional_gp(model);
  os << "discrepancy " << surrogate.discrepancy_gps.size() << '\n';
  for (const auto& model : surrogate.discrepancy_gps) write_optional_gp(model);

  os << "augmented " << surrogate.augmented.size() << '\n';
  for (const auto& obs : surrogate.augmented) {
    write_vector(os, obs.input);
    os << obs.source_level << ' ' << obs.trust.point_index << ' ';
    write_double(os, obs.value);
    os << ' ';
    write_double(os, obs.variance);
    os << ' ';
    write_double(os, obs.trust.d_min);
    os << ' ';
    write_double(os, obs.trust.radius);
    os << ' ';
    write_double(os, obs.trust.weight_W);
    os << ' ';
    write_double(os, obs.trust.alpha);
    os << '\n' << obs.trust.neighborhood.size();
    for (int idx : obs.trust.neighborhood) os << ' ' << idx;
    os << '\n';
  }

  os << "fusion\n";
  write_gp(os, surrogate.fusion_gp);
  if (!os) throw std::runtime_error("save_surrogate: write failed for " + path.string());
}

Surrogate load_surrogate(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_surrogate: cannot open " + path.string());
  std::string tag, version;
  is >> tag >> version;
  if (tag != kFormatTag || version != "v1")
    throw std::runtime_error("load_surrogate: unsupported format in " + path.string());

  Surrogate s;
  VectorXd lower = read_vector(is);
  VectorXd span = read_vector(is);
  s.input_normalizer = InputNormalizer(lower, lower + span);

  std::size_t count = 0;
  is >> tag >> count;
  if (tag != "levels") throw std::runtime_error("load_surrogate: expected levels block");
  s.levels.resize(count);
  for (auto& lv : s.levels) {
    is >> lv.level >> lv.count;
    lv.cost = read_double(is);
    lv.sigma_hat_sq = read_double(is);
  }

  auto read_optional_gp = [&is]() -> std::optional<gp::TrainedGp> {
    int present = 0;
    is >> present;
    if (!present) return std::nullopt;
    return read_gp(is);
  };
  is >> tag >> count;
  if (tag != "stage1") throw std::runtime_error("load_surrogate: expected stage1 block");
  s.stage1_gps.resize(count);
  for (auto& model : s.stage1_gps) model = read_optional_gp();
  is >> tag >> count;
  if (tag != "discrepancy") throw std::runtime_error("load_surrogate: expected discrepancy block");
  s.discrepancy_gps.resize(count);
  for (auto& model : s.discrepancy_gps) model = read_optional_gp();

  is >> tag >> count;
  if (tag != "augmented") throw std::runtime_error("load_surrogate: expected augmented block");
  s.augmented.resize(count);
  for (auto& obs : s.augmented) {
    obs.input = read_vector(is);
    is >> obs.source_level >> obs.trust.point_index;
    obs.value = read_double(is);
    obs.variance = read_double(is);
    obs.trust.d_min = read_double(is);
    obs.trust.radius = read_double(is);
    obs.trust.weight_W = read_double(is);
    obs.trust.alpha = read_double(is);
    std::size_t neighbors = 0;
    is >> neighbors;
    obs.trust.neighborhood.resize(neighbors);
    for (auto& idx : obs.trust.neighborhood) is >> idx;
  }

  is >> tag;
  if (tag != "fusion") throw std::runtime_error("load_surrogate: expected fusion block");
  s.fusion_gp = read_gp(is);
  return s;
}

}  // namespace mast
