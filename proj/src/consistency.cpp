#include "nfas/consistency.hpp"

#include <algorithm>
#include <cmath>

#include "nfas/error.hpp"

namespace nfas {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

SnciMap snci_map(const ModalityGroup& group, const SnciOptions& options) {
  const Eigen::Index M = group.scores.rows();
  if (M < 1) throw ValidationError("modality group has no models");
  if (!(options.epsilon > 0.0)) throw ValidationError("SNCI epsilon must be positive");
  if (!group.scores.allFinite()) throw ValidationError("alignment scores must be finite");

  SnciMap out;
  out.modality = group.modality;
  out.epsilon = options.epsilon;
  out.mu = group.scores.colwise().mean().transpose();
  const Eigen::MatrixXd dev = group.scores.rowwise() - out.mu.transpose();
  const double divisor = options.sample_std ? static_cast<double>(M - 1) : static_cast<double>(M);
  if (divisor > 0.0) {
    out.sigma = (dev.colwise().squaredNorm().transpose() / divisor).cwiseSqrt();
  } else {
    out.sigma = Eigen::VectorXd::Zero(group.scores.cols());
  }
  if (M == 1) {
    out.warnings.push_back("modality '" + std::string(modality_name(group.modality)) +
                           "' has a single model; sigma is zero");
  }

  out.snci.resize(out.mu.size());
  for (Eigen::Index r = 0; r < out.mu.size(); ++r) {
    out.snci(r) = logistic(out.mu(r) / (out.sigma(r) + options.epsilon));
  }
  return out;
}

namespace {

// Spread below rounding level of the data counts as constant: the mean of
// identical values is not always bitwise equal to them.
ZScored standardize(const Eigen::VectorXd& v, double mean, double sd, double max_abs) {
  ZScored z;
  if (!(sd > 1e-14 * max_abs)) {
    z.values = Eigen::VectorXd::Zero(v.size());
    z.constant = true;
  } else {
    z.values = (v.array() - mean) / sd;
  }
  return z;
}

}  // namespace

ZScored zscore_across_rois(const Eigen::VectorXd& values) {
  if (values.size() < 2) throw ValidationError("z-scoring needs at least 2 ROIs");
  const double mean = values.mean();
  const double sd = std::sqrt((values.array() - mean).square().mean());
  return standardize(values, mean, sd, values.cwiseAbs().maxCoeff());
}

std::vector<ZScored> zscore_jointly(std::span<const Eigen::VectorXd> maps) {
  Eigen::Index n = 0;
  double sum = 0.0;
  for (const auto& m : maps) {
    n += m.size();
    sum += m.sum();
  }
  if (n < 2) throw ValidationError("z-scoring needs at least 2 values");
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const auto& m : maps) ss += (m.array() - mean).square().sum();
  const double sd = std::sqrt(ss / static_cast<double>(n));
  double max_abs = 0.0;
  for (const auto& m : maps) {
    if (m.size() > 0) max_abs = std::max(max_abs, m.cwiseAbs().maxCoeff());
  }
  std::vector<ZScored> out;
  for (const auto& m : maps) out.push_back(standardize(m, mean, sd, max_abs));
  return out;
}

}  // namespace nfas
