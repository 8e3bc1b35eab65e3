#pragma once

// Depth-wise dynamic mode decomposition of layer embeddings.
//
// A network's layer embeddings x_1..x_L for one stimulus are treated as a
// trajectory. The first L-1 and last L-1 layers form two depth-shifted
// snapshot matrices, both centered on the mean of the first L-1 layers. A
// rank-truncated SVD of the centered first snapshot gives the reduced operator
//
//     A_r = U^T X2c V S^-1
//
// whose eigenvalues describe growth (|lambda| > 1), decay (< 1) and
// persistence (~ 1) of each mode. The mode closest to the unit circle is the
// "stable" mode; projecting the depth-averaged embedding onto it and adding
// back the snapshot mean gives the stable representation z of the stimulus.

#include <complex>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "nfas/error.hpp"

namespace nfas {

struct EmbeddingTrajectory {
  std::string stimulus_id;
  Eigen::MatrixXd layers;  ///< L x D, one row per layer in forward order

  [[nodiscard]] Eigen::Index layer_count() const { return layers.rows(); }
  [[nodiscard]] Eigen::Index dim() const { return layers.cols(); }
};

/// Raised for trajectories with fewer than three layers.
class DegenerateTrajectory : public DegeneracyError {
 public:
  using DegeneracyError::DegeneracyError;
};

/// Raised when the centered snapshots are numerically zero.
class ZeroDynamics : public DegeneracyError {
 public:
  using DegeneracyError::DegeneracyError;
};

struct SnapshotPair {
  Eigen::MatrixXd x1;   ///< D x (L-1), layers 1..L-1 as columns
  Eigen::MatrixXd x2;   ///< D x (L-1), layers 2..L as columns
  Eigen::VectorXd mean; ///< row mean of x1
  Eigen::MatrixXd x1c;  ///< x1 - mean 1^T
  Eigen::MatrixXd x2c;  ///< x2 - mean 1^T
};

struct DmdSpectrum {
  Eigen::Index rank = 0;
  Eigen::MatrixXd u;                ///< D x r
  Eigen::VectorXd sigma;            ///< r, strictly positive, non-increasing
  Eigen::MatrixXd v;                ///< (L-1) x r
  Eigen::MatrixXd reduced_operator; ///< r x r
  Eigen::VectorXcd eigenvalues;     ///< r
  /// D x r lifted modes U w_i, unit norm, phase fixed so that the
  /// largest-magnitude entry is real and positive.
  Eigen::MatrixXcd modes;
};

struct StableMode {
  Eigen::Index index = 0;
  std::complex<double> eigenvalue;
  Eigen::VectorXd direction;  ///< real, unit norm
};

struct StableRepresentation {
  Eigen::VectorXd depth_mean;  ///< mean over all L layers
  Eigen::VectorXd stable_mode;
  std::complex<double> stable_eigenvalue;
  Eigen::VectorXd z;
};

enum class DynamicsFallback { None, DegenerateLength, ZeroDynamics };

/// Full record of one trajectory's analysis, including the fallback taken.
struct DepthDynamicsResult {
  StableRepresentation representation;
  DynamicsFallback fallback = DynamicsFallback::None;
  std::optional<DmdSpectrum> spectrum;
  std::optional<Eigen::Index> selected_index;
};

inline constexpr double kDefaultSvdRelTol = 1e-10;

/// Validates shape and finiteness; throws ValidationError otherwise.
void validate_trajectory(const EmbeddingTrajectory& traj);

[[nodiscard]] SnapshotPair build_snapshots(const EmbeddingTrajectory& traj);

[[nodiscard]] DmdSpectrum fit_dmd(const SnapshotPair& snap, double svd_rel_tol = kDefaultSvdRelTol);

/// Index of the eigenvalue whose magnitude is closest to one. Ties (within
/// 1e-12) prefer the larger magnitude, then non-negative imaginary part.
[[nodiscard]] Eigen::Index select_stable_index(const Eigen::VectorXcd& eigenvalues);

[[nodiscard]] StableMode select_stable_mode(const DmdSpectrum& spectrum);

[[nodiscard]] StableRepresentation stable_representation(const EmbeddingTrajectory& traj,
                                                         const Eigen::VectorXd& stable_mode,
                                                         const Eigen::VectorXd& mean);

[[nodiscard]] DepthDynamicsResult analyze_trajectory(const EmbeddingTrajectory& traj,
                                                     double svd_rel_tol = kDefaultSvdRelTol);

/// Shorthand for analyze_trajectory(...).representation.z.
[[nodiscard]] Eigen::VectorXd trajectory_to_z(const EmbeddingTrajectory& traj,
                                              double svd_rel_tol = kDefaultSvdRelTol);

}  // namespace nfas
