#pragma once

// ROI-level linear encoding models and the alignment scores they produce.
//
// Each ROI response is regressed on the HRF-convolved stable features with
// ridge regression. Scores are out-of-fold: the scan is cut into k contiguous
// blocks, each block is predicted from a model trained on the others, and the
// squared Pearson correlation of the stitched predictions with the observed
// response is the ROI's alignment score in [0, 1].

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nfas/hemodynamics.hpp"
#include "nfas/modality.hpp"

namespace nfas {

struct RidgeFit {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  /// Set when lambda == 0 and the centered design is rank deficient; the
  /// minimum-norm solution is returned.
  bool rank_deficient = false;
};

/// Minimizes |y - Xw - b|^2 + lambda |w|^2 with an unpenalized intercept, via
/// the SVD of the centered design.
[[nodiscard]] RidgeFit fit_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda);

/// {1e-3, 1e-2, ..., 1e5}
[[nodiscard]] std::vector<double> default_lambda_grid();

struct CvConfig {
  int folds = 5;
  std::vector<double> lambda_grid = default_lambda_grid();
};

/// One outer fold's fitted model. Weights act on features standardized with
/// the fold's training statistics.
struct FoldFit {
  int fold = 0;
  bool skipped = false;
  double lambda = 0.0;
  Eigen::VectorXd weights;
  double intercept = 0.0;
};

struct CvResult {
  double score = 0.0;
  /// True when no fold could be fitted or the correlation was undefined.
  bool degenerate = false;
  std::vector<int> fold_assignment;  ///< block id per volume
  std::vector<FoldFit> folds;
  Eigen::VectorXd predictions;       ///< out-of-fold, NaN for skipped blocks
  std::vector<std::string> warnings;
};

/// Squared Pearson correlation, 0 when either input is constant.
[[nodiscard]] double squared_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Precomputed fold structure for one design matrix. The decompositions only
/// depend on X, so a plan is built once and evaluated for every ROI.
class CvPlan {
 public:
  CvPlan(const Eigen::MatrixXd& x, const CvConfig& config);
  ~CvPlan();
  CvPlan(CvPlan&&) noexcept;
  CvPlan& operator=(CvPlan&&) noexcept;

  [[nodiscard]] CvResult evaluate(const Eigen::VectorXd& y) const;
  [[nodiscard]] Eigen::Index volumes() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

[[nodiscard]] CvResult cv_alignment(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                    const CvConfig& config);
[[nodiscard]] double cv_alignment_score(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                        const CvConfig& config);

struct RoiTimeSeries {
  double tr = 0.0;
  Eigen::MatrixXd values;  ///< R x T

  [[nodiscard]] Eigen::Index rois() const { return values.rows(); }
  [[nodiscard]] Eigen::Index volumes() const { return values.cols(); }
};

struct AlignmentVector {
  std::string model_id;
  Modality modality = Modality::Vision;
  Eigen::VectorXd scores;                 ///< R, in [0, 1]
  std::vector<Eigen::Index> degenerate_rois;
  std::vector<std::string> warnings;
};

[[nodiscard]] AlignmentVector alignment_vector(const FeatureSeries& features,
                                               const RoiTimeSeries& brain, const CvConfig& config,
                                               std::string model_id, Modality modality,
                                               int jobs = 1);

}  // namespace nfas
