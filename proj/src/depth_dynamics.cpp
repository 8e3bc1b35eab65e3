#include "nfas/depth_dynamics.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace nfas {
namespace {

constexpr double kTieTolerance = 1e-12;
constexpr double kZeroFloor = 1e-14;

// Rotates a complex vector so that its largest-magnitude entry is real and
// positive. Entries within a relative 1e-8 of the maximum count as tied and
// the first one wins, so the choice is stable under rounding noise.
void canonicalize_phase(Eigen::Ref<Eigen::VectorXcd> v) {
  const double peak = v.cwiseAbs().maxCoeff();
  if (peak == 0.0) return;
  Eigen::Index pivot = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) >= peak * (1.0 - 1e-8)) {
      pivot = i;
      break;
    }
  }
  v *= std::conj(v(pivot)) / std::abs(v(pivot));
}

}  // namespace

void validate_trajectory(const EmbeddingTrajectory& traj) {
  if (traj.layer_count() < 1 || traj.dim() < 1) {
    throw ValidationError("trajectory '" + traj.stimulus_id + "' is empty");
  }
  if (!traj.layers.allFinite()) {
    throw ValidationError("trajectory '" + traj.stimulus_id + "' has non-finite entries");
  }
}

SnapshotPair build_snapshots(const EmbeddingTrajectory& traj) {
  validate_trajectory(traj);
  const Eigen::Index L = traj.layer_count();
  if (L < 3) {
    throw DegenerateTrajectory("trajectory '" + traj.stimulus_id + "' has " + std::to_string(L) +
                               " layers; at least 3 are needed");
  }
  SnapshotPair s;
  s.x1 = traj.layers.topRows(L - 1).transpose();
  s.x2 = traj.layers.bottomRows(L - 1).transpose();
  s.mean = s.x1.rowwise().mean();
  s.x1c = s.x1.colwise() - s.mean;
  s.x2c = s.x2.colwise() - s.mean;
  return s;
}

DmdSpectrum fit_dmd(const SnapshotPair& snap, double svd_rel_tol) {
  if (!(svd_rel_tol > 0.0 && svd_rel_tol < 1.0)) {
    throw ValidationError("svd_rel_tol must lie in (0, 1)");
  }
  if (snap.x1c.rows() != snap.x2c.rows() || snap.x1c.cols() != snap.x2c.cols()) {
    throw ValidationError("snapshot matrices differ in shape");
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(snap.x1c, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double floor = kZeroFloor * std::max(1.0, snap.x1.norm());
  if (sv.size() == 0 || sv(0) < floor) {
    throw ZeroDynamics("centered snapshots are numerically zero");
  }

  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) >= svd_rel_tol * sv(0) && sv(rank) >= floor) ++rank;

  DmdSpectrum out;
  out.rank = rank;
  out.u = svd.matrixU().leftCols(rank);
  out.sigma = sv.head(rank);
  out.v = svd.matrixV().leftCols(rank);
  out.reduced_operator =
      out.u.transpose() * snap.x2c * out.v * out.sigma.cwiseInverse().asDiagonal();

  Eigen::EigenSolver<Eigen::MatrixXd> eig(out.reduced_operator, /*computeEigenvectors=*/true);
  if (eig.info() != Eigen::Success) {
    throw DegeneracyError("eigendecomposition of the reduced operator did not converge");
  }
  out.eigenvalues = eig.eigenvalues();
  out.modes = out.u.cast<std::complex<double>>() * eig.eigenvectors();
  for (Eigen::Index i = 0; i < rank; ++i) {
    out.modes.col(i).normalize();
    canonicalize_phase(out.modes.col(i));
  }
  return out;
}

Eigen::Index select_stable_index(const Eigen::VectorXcd& eigenvalues) {
  if (eigenvalues.size() == 0) throw ValidationError("empty spectrum");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < eigenvalues.size(); ++i) {
    const double mag = std::abs(eigenvalues(i));
    const double best_mag = std::abs(eigenvalues(best));
    const double dist = std::abs(mag - 1.0);
    const double best_dist = std::abs(best_mag - 1.0);
    if (dist < best_dist - kTieTolerance) {
      best = i;
    } else if (dist <= best_dist + kTieTolerance) {
      if (mag > best_mag + kTieTolerance) {
        best = i;
      } else if (mag >= best_mag - kTieTolerance && eigenvalues(best).imag() < 0.0 &&
                 eigenvalues(i).imag() >= 0.0) {
        best = i;
      }
    }
  }
  return best;
}

StableMode select_stable_mode(const DmdSpectrum& spectrum) {
  if (spectrum.rank < 1) throw ValidationError("spectrum has rank 0");
  StableMode s;
  s.index = select_stable_index(spectrum.eigenvalues);
  s.eigenvalue = spectrum.eigenvalues(s.index);
  const Eigen::VectorXcd& phi = spectrum.modes.col(s.index);
  Eigen::VectorXd dir = phi.real();
  if (dir.norm() < 1e-10) dir = phi.imag();
  s.direction = dir.normalized();
  return s;
}

StableRepresentation stable_representation(const EmbeddingTrajectory& traj,
                                           const Eigen::VectorXd& stable_mode,
                                           const Eigen::VectorXd& mean) {
  validate_trajectory(traj);
  if (stable_mode.size() != traj.dim() || mean.size() != traj.dim()) {
    std::ostringstream msg;
    msg << "dimension mismatch: trajectory D=" << traj.dim() << ", mode " << stable_mode.size()
        << ", mean " << mean.size();
    throw ValidationError(msg.str());
  }
  StableRepresentation r;
  r.depth_mean = traj.layers.colwise().mean().transpose();
  r.stable_mode = stable_mode;
  const double coeff = stable_mode.dot(r.depth_mean) / stable_mode.squaredNorm();
  r.z = coeff * stable_mode + mean;
  return r;
}

DepthDynamicsResult analyze_trajectory(const EmbeddingTrajectory& traj, double svd_rel_tol) {
  validate_trajectory(traj);
  DepthDynamicsResult result;
  auto fallback = [&](DynamicsFallback kind) {
    result.fallback = kind;
    result.representation.depth_mean = traj.layers.colwise().mean().transpose();
    result.representation.stable_mode = Eigen::VectorXd::Zero(traj.dim());
    result.representation.stable_eigenvalue = 0.0;
    result.representation.z = result.representation.depth_mean;
    return result;
  };

  if (traj.layer_count() < 3) return fallback(DynamicsFallback::DegenerateLength);
  const SnapshotPair snap = build_snapshots(traj);
  DmdSpectrum spectrum;
  try {
    spectrum = fit_dmd(snap, svd_rel_tol);
  } catch (const ZeroDynamics&) {
    return fallback(DynamicsFallback::ZeroDynamics);
  }
  const StableMode mode = select_stable_mode(spectrum);
  result.representation = stable_representation(traj, mode.direction, snap.mean);
  result.representation.stable_eigenvalue = mode.eigenvalue;
  result.selected_index = mode.index;
  result.spectrum = std::move(spectrum);
  return result;
}

Eigen::VectorXd trajectory_to_z(const EmbeddingTrajectory& traj, double svd_rel_tol) {
  return analyze_trajectory(traj, svd_rel_tol).representation.z;
}

}  // namespace nfas
