#pragma once

// Synthetic data with known ground truth: linear layer dynamics, linear ROI
// readouts and clustered model populations, plus a writer for complete
// on-disk workspaces.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nfas/depth_dynamics.hpp"
#include "nfas/encoding.hpp"
#include "nfas/hemodynamics.hpp"

namespace nfas {

/// A 2x2 block radius * R(angle), contributing radius * exp(+-i angle).
struct RotationPair {
  double angle = 0.0;  ///< radians
  double radius = 1.0;
};

/// x_l = basis * A^(l-1) * initial + offset, with A block diagonal: the
/// rotation blocks first, then the real eigenvalues.
struct TrajectorySpec {
  int layers = 9;
  std::vector<RotationPair> rotations;
  std::vector<double> reals;
  Eigen::VectorXd initial;  ///< generator coordinates, 2*rotations + reals
  Eigen::VectorXd offset;   ///< D; empty means zero
  Eigen::MatrixXd basis;    ///< D x n with orthonormal columns; empty means identity
  std::string stimulus_id = "synthetic";
};

struct GeneratedTrajectory {
  EmbeddingTrajectory trajectory;
  Eigen::MatrixXd generator;  ///< n x n block-diagonal A
  Eigen::VectorXcd spectrum;  ///< exact eigenvalues of A, in block order
};

[[nodiscard]] GeneratedTrajectory gen_linear_trajectory(const TrajectorySpec& spec);

/// D x n matrix with orthonormal columns, from the QR of a seeded Gaussian.
[[nodiscard]] Eigen::MatrixXd random_orthonormal_basis(Eigen::Index d, Eigen::Index n,
                                                       std::uint64_t seed);

struct RoiResponseSpec {
  Eigen::MatrixXd weights;  ///< R x D readout
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

struct GeneratedBrain {
  RoiTimeSeries brain;
  Eigen::MatrixXd weights;  ///< R x D, as given
};

/// y_r(t) = w_r . features(t) + sigma * noise, one noise stream per ROI.
[[nodiscard]] GeneratedBrain gen_roi_responses(const FeatureSeries& features,
                                               const RoiResponseSpec& spec);

struct ClusterSpec {
  std::vector<std::string> modalities = {"vision", "audio"};
  int models_per_modality = 5;
  int rois = 20;
  double level = 0.5;            ///< centroid mean score
  double separation_deg = 30.0;  ///< angle between any two centroids
  double dispersion = 0.01;      ///< per-entry Gaussian noise around a centroid
  std::uint64_t seed = 0;
};

struct GeneratedClusters {
  Eigen::MatrixXd scores;  ///< M x R, grouped by modality in spec order
  std::vector<std::string> labels;
  Eigen::MatrixXd centroids;  ///< K x R
  double saturated_fraction = 0.0;
};

/// Centroids sit on a cone around the constant direction with pairwise angle
/// separation_deg; members are centroid + noise, clipped to [0, 1].
[[nodiscard]] GeneratedClusters gen_modality_clusters(const ClusterSpec& spec);

struct WorkspaceSpec {
  std::uint64_t seed = 7;
  int models_per_modality = 5;
  int stimuli = 60;
  int layers = 12;
  int dim = 16;
  int rois_per_network = 4;
  double tr = 2.0;
  int volumes = 120;
  double stimulus_interval = 4.0;  ///< seconds between onsets
  double brain_noise = 0.3;
  double feature_noise = 0.6;      ///< model-specific nuisance in the content
  int n_permutations = 999;
};

struct WorkspaceSummary {
  std::filesystem::path manifest;
  std::vector<std::string> model_ids;
  Eigen::Index rois = 0;
};

/// Writes trajectories/, brain/ and manifest.json under `dir`.
WorkspaceSummary make_workspace(const std::filesystem::path& dir, const WorkspaceSpec& spec);

}  // namespace nfas
