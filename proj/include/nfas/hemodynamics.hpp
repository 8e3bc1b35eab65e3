#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace nfas {

/// Double-gamma HRF. Each gamma bump has shape delay/dispersion and scale
/// dispersion (seconds), so its mode sits at delay - dispersion.
struct HrfParams {
  double peak_delay = 6.0;
  double undershoot_delay = 16.0;
  double peak_dispersion = 1.0;
  double undershoot_dispersion = 1.0;
  double undershoot_ratio = 1.0 / 6.0;
  double duration = 32.0;
  double dt = 0.1;

  /// Throws ValidationError. Delays must exceed their dispersions so that
  /// the kernel starts at zero.
  void validate() const;
};

/// Stimulus-locked features sampled once per volume.
struct FeatureSeries {
  double tr = 0.0;
  Eigen::MatrixXd values;  ///< T x D
  bool convolved = false;

  [[nodiscard]] Eigen::Index volumes() const { return values.rows(); }
  [[nodiscard]] Eigen::Index dim() const { return values.cols(); }
};

/// Kernel sampled at k*dt for k = 0..floor(duration/dt), peak scaled to 1.
[[nodiscard]] std::vector<double> canonical_hrf(const HrfParams& p);

/// Averages the dt-grid kernel within consecutive bins [k*tr, (k+1)*tr).
[[nodiscard]] std::vector<double> resample_kernel(std::span<const double> kernel, double dt,
                                                  double tr);

/// Causal convolution of every column with the TR-resampled kernel,
/// truncated to the input length.
[[nodiscard]] FeatureSeries convolve_hrf(const FeatureSeries& series, const HrfParams& p);

/// Sample-and-hold design: volume t carries the z of the latest onset at or
/// before t*tr; volumes before the first onset are zero.
[[nodiscard]] FeatureSeries align_to_volumes(std::span<const double> onsets,
                                             std::span<const Eigen::VectorXd> z, double tr,
                                             Eigen::Index volumes);

}  // namespace nfas
