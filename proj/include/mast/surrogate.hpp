#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "mast/gp.hpp"

// Multi-fidelity surrogate built in three stages: independent per-level GPs,
// discrepancy-corrected augmentation of every lower-fidelity observation with
// a distance-based trust weight, and a final GP trained on the pooled data
// with fixed per-point noise variances.

namespace mast {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct FidelityDataset {
  int level = 1;      // ascending; the highest level is the ground-truth-like source
  MatrixXd inputs;    // original units
  VectorXd outputs;
  double cost = 1.0;  // per evaluation, in equivalent highest-fidelity units
};

struct TrustWeight {
  int point_index = -1;
  double d_min = 0.0;              // normalized-space distance to the nearest HF point
  double radius = 0.0;
  std::vector<int> neighborhood;   // HF indices inside the trust region
  double weight_W = 0.0;           // in [0, 1]; 0 means full trust in the HF prediction
  double alpha = 0.0;
};

struct AugmentedObservation {
  VectorXd input;    // normalized coordinates
  double value = 0.0;      // blended observation, original units
  double variance = 0.0;   // propagated variance, original units^2
  int source_level = 0;
  TrustWeight trust;
};

/// Min-max map onto the unit hypercube. Degenerate dimensions keep scale 1.
class InputNormalizer {
 public:
  InputNormalizer() = default;
  InputNormalizer(VectorXd lower, VectorXd upper);
  MatrixXd normalize(const MatrixXd& rows) const;
  const VectorXd& lower() const { return lower_; }
  const VectorXd& span() const { return span_; }

 private:
  VectorXd lower_;
  VectorXd span_;
};

// Deterministic per-fit seeds, keyed by fidelity level number so that the
// augmentation of one level is unaffected by adding, removing or reordering
// other levels.
std::uint64_t stage1_seed(std::uint64_t build_seed, int level);
std::uint64_t stage2_seed(std::uint64_t build_seed, int level);
std::uint64_t stage3_seed(std::uint64_t build_seed);

/// Weight-decay exponent from a cost ratio C_highest / C_level > 1.
double alpha_exponent(double cost_ratio);

/// Trust-region radius around a low-fidelity point.
double trust_radius(double d_min);

/// Distance-based weight of one point against the high-fidelity set
/// (normalized coordinates). The nearest HF point is always a neighbor.
TrustWeight local_weight(const VectorXd& point, const MatrixXd& hf_points, double alpha);

/// GP over the residuals between HF observations and a lower-level model's
/// posterior mean, evaluated at the HF locations (normalized inputs).
gp::TrainedGp fit_discrepancy(const gp::TrainedGp& lower_gp, const MatrixXd& hf_inputs_norm,
                              const VectorXd& hf_outputs, const gp::FitOptions& options);

struct AugmentResult {
  double value = 0.0;
  double variance = 0.0;
};

/// Blend a corrected low-fidelity observation with the HF prediction:
/// value = W (y + mu_delta) + (1-W) mu_hf, with independent-component
/// variance propagation.
AugmentResult augment_point(double y, double mu_delta, double var_delta, double mu_hf,
                            double var_hf, double sigma_m_sq, double weight);

struct LevelSummary {
  int level = 0;
  double cost = 0.0;
  long count = 0;
  double sigma_hat_sq = 0.0;  // stage-1 noise estimate, original units^2
};

struct Surrogate {
  // Per level in ascending cost order; empty slots mark levels with no data.
  std::vector<std::optional<gp::TrainedGp>> stage1_gps;
  // One per level below the highest (same indexing as stage1_gps).
  std::vector<std::optional<gp::TrainedGp>> discrepancy_gps;
  std::vector<AugmentedObservation> augmented;
  gp::TrainedGp fusion_gp;
  InputNormalizer input_normalizer;
  std::vector<LevelSummary> levels;

  /// Queries in original units; delegates to the fusion GP.
  gp::Prediction predict(const MatrixXd& queries) const;
};

/// Run the full pipeline. Levels may arrive in any order; costs must strictly
/// increase with level and the highest level needs at least two points. An
/// empty lower level is skipped (degenerate path used by the harness).
Surrogate build_surrogate(std::vector<FidelityDataset> datasets, const VectorXd& lower_bounds,
                          const VectorXd& upper_bounds, const gp::FitOptions& options,
                          std::uint64_t seed);

/// Versioned text snapshot; reloading reproduces bit-identical predictions.
void save_surrogate(const Surrogate& surrogate, const std::filesystem::path& path);
Surrogate load_surrogate(const std::filesystem::path& path);

}  // namespace mast
