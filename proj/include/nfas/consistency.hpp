#pragma once

// Signal-to-noise consistency index (SNCI): per ROI, the mean alignment of a
// modality's models divided by their spread, squashed through a logistic.
//
//     SNCI_r = 1 / (1 + exp(-mu_r / (sigma_r + eps)))

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nfas/modality.hpp"

namespace nfas {

struct ModalityGroup {
  Modality modality = Modality::Vision;
  std::vector<std::string> model_ids;
  Eigen::MatrixXd scores;  ///< M x R alignment scores
};

struct SnciOptions {
  double epsilon = 1e-8;
  /// Divide the variance by M-1 instead of M.
  bool sample_std = false;
};

struct SnciMap {
  Modality modality = Modality::Vision;
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma;
  Eigen::VectorXd snci;
  double epsilon = 0.0;
  std::vector<std::string> warnings;
};

[[nodiscard]] double logistic(double x);

[[nodiscard]] SnciMap snci_map(const ModalityGroup& group, const SnciOptions& options = {});

struct ZScored {
  Eigen::VectorXd values;
  bool constant = false;  ///< input had zero spread; values are all zero
};

/// Standardizes to mean 0 and population standard deviation 1.
[[nodiscard]] ZScored zscore_across_rois(const Eigen::VectorXd& values);

/// Standardizes several maps with one shared mean and spread.
[[nodiscard]] std::vector<ZScored> zscore_jointly(std::span<const Eigen::VectorXd> maps);

}  // namespace nfas
