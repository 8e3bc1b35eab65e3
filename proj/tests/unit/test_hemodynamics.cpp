#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "../oracles/reference.hpp"
#include "helpers.hpp"
#include "nfas/error.hpp"
#include "nfas/hemodynamics.hpp"

using namespace nfas;

namespace {

// scipy.stats.gamma reference: shape 6 and 16, scale 1, ratio 1/6, dt 0.1,
// peak-normalized, averaged into 2 s bins.
const double kScipyTr2[] = {
    0.042191508940394071,   0.54799725975032221,    0.96642792045975612,    0.73149347373280593,
    0.34288618883980426,    0.086968334081386531,   -0.039014374731125366,  -0.084011086220228931,
    -0.082902454691603011,  -0.061709965204718074,  -0.038186680336157332,  -0.020496012494529439,
    -0.0097934777477345671, -0.0042440208103736348, -0.0016917847880430562, -0.00062734676552193792,
    -0.00034755110649116114};

FeatureSeries series(Eigen::MatrixXd values, double tr = 2.0) {
  FeatureSeries s;
  s.tr = tr;
  s.values = std::move(values);
  return s;
}

}  // namespace

TEST_CASE("canonical kernel shape") {
  const auto h = canonical_hrf({});
  REQUIRE(h.size() == 321);
  CHECK(h[0] == 0.0);
  const auto peak = std::max_element(h.begin(), h.end()) - h.begin();
  const double t_peak = static_cast<double>(peak) * 0.1;
  CHECK(t_peak >= 4.5);
  CHECK(t_peak <= 6.0);
  CHECK(h[static_cast<std::size_t>(peak)] == 1.0);
  CHECK(*std::min_element(h.begin(), h.end()) < 0.0);

  HrfParams no_undershoot;
  no_undershoot.undershoot_ratio = 0.0;
  const auto g = canonical_hrf(no_undershoot);
  CHECK(*std::min_element(g.begin(), g.end()) >= 0.0);
}

TEST_CASE("TR resampling matches the scipy reference") {
  const auto k = resample_kernel(canonical_hrf({}), 0.1, 2.0);
  REQUIRE(k.size() == std::size(kScipyTr2));
  for (std::size_t i = 0; i < k.size(); ++i) CHECK(k[i] == doctest::Approx(kScipyTr2[i]).epsilon(1e-12));
}

TEST_CASE("parameter validation") {
  HrfParams p;
  p.duration = 10.0;  // shorter than the undershoot delay
  CHECK_THROWS_AS(p.validate(), ValidationError);
  HrfParams q;
  q.peak_dispersion = -1;
  CHECK_THROWS_AS(q.validate(), ValidationError);
  CHECK_THROWS_AS((void)resample_kernel(canonical_hrf({}), 0.1, 0.05), ValidationError);
}

TEST_CASE("impulse response equals the resampled kernel") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(30, 2);
  x(0, 1) = 1.0;
  const FeatureSeries out = convolve_hrf(series(x), {});
  const auto k = resample_kernel(canonical_hrf({}), 0.1, 2.0);
  CHECK(out.convolved);
  for (Eigen::Index t = 0; t < 30; ++t) {
    CHECK(out.values(t, 1) == (t < static_cast<Eigen::Index>(k.size()) ? k[static_cast<std::size_t>(t)] : 0.0));
    CHECK(out.values(t, 0) == 0.0);
  }
  // Truncated to T when T is shorter than the kernel.
  Eigen::MatrixXd shortx = Eigen::MatrixXd::Zero(5, 1);
  shortx(0, 0) = 1.0;
  const FeatureSeries s = convolve_hrf(series(shortx), {});
  REQUIRE(s.volumes() == 5);
  for (Eigen::Index t = 0; t < 5; ++t) CHECK(s.values(t, 0) == k[static_cast<std::size_t>(t)]);
}

TEST_CASE("zero input, double convolution and long TR") {
  const FeatureSeries z = convolve_hrf(series(Eigen::MatrixXd::Zero(10, 3)), {});
  CHECK(z.values.isZero(0.0));
  CHECK_THROWS_AS((void)convolve_hrf(z, {}), ValidationError);
  CHECK_THROWS_AS((void)convolve_hrf(series(Eigen::MatrixXd::Zero(10, 3), 40.0), {}), ValidationError);
}

TEST_CASE("brute-force convolution, linearity, causality, determinism") {
  const auto k = resample_kernel(canonical_hrf({}), 0.1, 2.0);
  const Eigen::MatrixXd a = testing::gaussian(50, 3, 1);
  const Eigen::MatrixXd b = testing::gaussian(50, 3, 2);
  const FeatureSeries ca = convolve_hrf(series(a), {});
  CHECK((ca.values - oracle::direct_convolution(a, k)).cwiseAbs().maxCoeff() <= 1e-12);

  const FeatureSeries cb = convolve_hrf(series(b), {});
  const FeatureSeries mix = convolve_hrf(series(2.5 * a - 0.7 * b), {});
  CHECK((mix.values - (2.5 * ca.values - 0.7 * cb.values)).cwiseAbs().maxCoeff() <= 1e-12);

  Eigen::MatrixXd late = a;
  late.row(40) += Eigen::RowVector3d(5, 5, 5);
  const FeatureSeries cl = convolve_hrf(series(late), {});
  CHECK(cl.values.topRows(40) == ca.values.topRows(40));
  CHECK(cl.values.row(40) != ca.values.row(40));

  CHECK(convolve_hrf(series(a), {}).values == ca.values);
}

TEST_CASE("sample-and-hold alignment") {
  const Eigen::VectorXd za = Eigen::Vector2d(1, 2);
  const Eigen::VectorXd zb = Eigen::Vector2d(-3, 4);
  {
    const std::vector<double> onsets{0.0};
    const std::vector<Eigen::VectorXd> z{za};
    const FeatureSeries s = align_to_volumes(onsets, z, 2.0, 5);
    for (Eigen::Index t = 0; t < 5; ++t) CHECK(s.values.row(t) == za.transpose());
  }
  {
    const std::vector<double> onsets{0.0, 4.0};
    const std::vector<Eigen::VectorXd> z{za, zb};
    const FeatureSeries s = align_to_volumes(onsets, z, 2.0, 4);
    CHECK(s.values.row(0) == za.transpose());
    CHECK(s.values.row(1) == za.transpose());
    CHECK(s.values.row(2) == zb.transpose());
    CHECK(s.values.row(3) == zb.transpose());
    CHECK_FALSE(s.convolved);
  }
  {
    const std::vector<double> onsets{3.0};
    const std::vector<Eigen::VectorXd> z{za};
    const FeatureSeries s = align_to_volumes(onsets, z, 2.0, 3);
    CHECK(s.values.row(0).isZero(0.0));
    CHECK(s.values.row(1).isZero(0.0));
    CHECK(s.values.row(2) == za.transpose());
  }
}

TEST_CASE("alignment errors") {
  const std::vector<Eigen::VectorXd> none;
  CHECK_THROWS_AS((void)align_to_volumes(std::vector<double>{}, none, 2.0, 4), ValidationError);
  const std::vector<Eigen::VectorXd> two{Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 1)};
  CHECK_THROWS_WITH_AS((void)align_to_volumes(std::vector<double>{0.0, 8.0}, two, 2.0, 4),
                       doctest::Contains("#1 (8 s)"), ValidationError);
  CHECK_THROWS_AS((void)align_to_volumes(std::vector<double>{4.0, 2.0}, two, 2.0, 4), ValidationError);
}
