#include "nfas/hemodynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nfas/error.hpp"

namespace nfas {
namespace {

// Gamma density with shape delay/dispersion and scale dispersion.
double gamma_bump(double t, double delay, double dispersion) {
  if (t <= 0.0) return 0.0;
  const double shape = delay / dispersion;
  const double log_pdf = (shape - 1.0) * std::log(t) - t / dispersion - std::lgamma(shape) -
                         shape * std::log(dispersion);
  return std::exp(log_pdf);
}

// Guards bin assignment against k*dt landing a hair below a bin edge.
constexpr double kBinSlack = 1e-9;

}  // namespace

void HrfParams::validate() const {
  const double all[] = {peak_delay,       undershoot_delay, peak_dispersion, undershoot_dispersion,
                        undershoot_ratio, duration,         dt};
  for (double v : all) {
    if (!std::isfinite(v) || v < 0.0) throw ValidationError("HRF parameters must be finite and non-negative");
  }
  if (peak_delay <= 0 || undershoot_delay <= 0 || peak_dispersion <= 0 ||
      undershoot_dispersion <= 0 || duration <= 0 || dt <= 0) {
    throw ValidationError("HRF delays, dispersions, duration and dt must be positive");
  }
  if (peak_delay <= peak_dispersion || undershoot_delay <= undershoot_dispersion) {
    throw ValidationError("HRF delays must exceed their dispersions");
  }
  if (duration < undershoot_delay) throw ValidationError("HRF duration must cover the undershoot delay");
  if (dt > duration) throw ValidationError("HRF dt exceeds its duration");
}

std::vector<double> canonical_hrf(const HrfParams& p) {
  p.validate();
  const auto n = static_cast<std::size_t>(std::floor(p.duration / p.dt + kBinSlack)) + 1;
  std::vector<double> h(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * p.dt;
    h[k] = gamma_bump(t, p.peak_delay, p.peak_dispersion) -
           p.undershoot_ratio * gamma_bump(t, p.undershoot_delay, p.undershoot_dispersion);
  }
  const double peak = *std::max_element(h.begin(), h.end());
  if (peak > 0.0) {
    for (double& v : h) v /= peak;
  }
  return h;
}

std::vector<double> resample_kernel(std::span<const double> kernel, double dt, double tr) {
  if (!(dt > 0.0) || !(tr > 0.0)) throw ValidationError("dt and TR must be positive");
  if (dt > tr) throw ValidationError("HRF dt must not exceed TR");
  std::vector<double> sums;
  std::vector<int> counts;
  for (std::size_t k = 0; k < kernel.size(); ++k) {
    const auto bin = static_cast<std::size_t>(std::floor(static_cast<double>(k) * dt / tr + kBinSlack));
    if (bin >= sums.size()) {
      sums.resize(bin + 1, 0.0);
      counts.resize(bin + 1, 0);
    }
    sums[bin] += kernel[k];
    ++counts[bin];
  }
  for (std::size_t b = 0; b < sums.size(); ++b) {
    if (counts[b] > 0) sums[b] /= counts[b];
  }
  return sums;
}

FeatureSeries convolve_hrf(const FeatureSeries& series, const HrfParams& p) {
  if (series.convolved) throw ValidationError("feature series is already convolved");
  if (!(series.tr > 0.0)) throw ValidationError("feature series TR must be positive");
  if (series.tr > p.duration) {
    std::ostringstream msg;
    msg << "TR " << series.tr << " s exceeds the HRF duration " << p.duration << " s";
    throw ValidationError(msg.str());
  }
  if (!series.values.allFinite()) throw ValidationError("feature series has non-finite entries");

  const auto kernel = resample_kernel(canonical_hrf(p), p.dt, series.tr);
  const Eigen::Index T = series.volumes();
  const auto K = static_cast<Eigen::Index>(kernel.size());

  FeatureSeries out;
  out.tr = series.tr;
  out.convolved = true;
  out.values = Eigen::MatrixXd::Zero(T, series.dim());
  for (Eigen::Index d = 0; d < series.dim(); ++d) {
    for (Eigen::Index t = 0; t < T; ++t) {
      double acc = 0.0;
      const Eigen::Index kmax = std::min(K - 1, t);
      for (Eigen::Index k = 0; k <= kmax; ++k) acc += kernel[static_cast<std::size_t>(k)] * series.values(t - k, d);
      out.values(t, d) = acc;
    }
  }
  return out;
}

FeatureSeries align_to_volumes(std::span<const double> onsets, std::span<const Eigen::VectorXd> z,
                               double tr, Eigen::Index volumes) {
  if (onsets.empty()) throw ValidationError("stimulus design has no onsets");
  if (onsets.size() != z.size()) {
    throw ValidationError("got " + std::to_string(onsets.size()) + " onsets but " +
                          std::to_string(z.size()) + " feature vectors");
  }
  if (!(tr > 0.0)) throw ValidationError("TR must be positive");
  if (volumes < 2) throw ValidationError("feature series needs at least 2 volumes");

  const double scan_end = static_cast<double>(volumes) * tr;
  std::ostringstream bad;
  bool any_bad = false;
  for (std::size_t i = 0; i < onsets.size(); ++i) {
    if (!(onsets[i] >= 0.0 && onsets[i] < scan_end)) {
      bad << (any_bad ? ", " : "") << "#" << i << " (" << onsets[i] << " s)";
      any_bad = true;
    }
  }
  if (any_bad) {
    throw ValidationError("onsets outside the scan [0, " + std::to_string(scan_end) +
                          " s): " + bad.str());
  }
  for (std::size_t i = 1; i < onsets.size(); ++i) {
    if (onsets[i] < onsets[i - 1]) throw ValidationError("onsets must be nondecreasing");
  }
  const Eigen::Index D = z.front().size();
  for (const auto& v : z) {
    if (v.size() != D) throw ValidationError("feature vectors differ in dimension");
  }

  FeatureSeries out;
  out.tr = tr;
  out.values = Eigen::MatrixXd::Zero(volumes, D);
  std::size_t next = 0;
  std::ptrdiff_t current = -1;
  for (Eigen::Index t = 0; t < volumes; ++t) {
    const double time = static_cast<double>(t) * tr;
    while (next < onsets.size() && onsets[next] <= time) current = static_cast<std::ptrdiff_t>(next++);
    if (current >= 0) out.values.row(t) = z[static_cast<std::size_t>(current)].transpose();
  }
  return out;
}

}  // namespace nfas
