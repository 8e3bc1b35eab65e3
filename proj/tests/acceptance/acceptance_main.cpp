// One PASS/FAIL line per acceptance criterion. Tolerances and runtime limits
// are fixed below. Exit status is nonzero if any line fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nfas/consistency.hpp"
#include "nfas/depth_dynamics.hpp"
#include "nfas/encoding.hpp"
#include "nfas/geometry_stats.hpp"
#include "nfas/hemodynamics.hpp"
#include "nfas/pipeline.hpp"
#include "nfas/synth.hpp"
#include "oracles/dmd_oracle.hpp"
#include "oracles/reference.hpp"

using namespace nfas;
namespace fs = std::filesystem;

namespace {

constexpr double kSpectrumTol = 1e-10;
constexpr double kStableTol = 1e-8;
constexpr double kOracleTol = 1e-10;
constexpr double kParallelTol = 1e-10;
constexpr double kShiftSpectrumTol = 1e-12;
constexpr double kConvolutionTol = 1e-12;
constexpr double kRecoveryFloor = 0.99;
constexpr double kNullCeiling = 0.1;
constexpr int kNullRuns = 100;
constexpr int kNullLowRequired = 95;
constexpr double kSnciExample = 0.95257;
constexpr double kSnciExampleTol = 1e-5;
constexpr double kSaturationTol = 1e-9;
constexpr double kPermanovaFloor = 1.0 / 1000.0;
constexpr int kPermanovaCalibrated = 90;
constexpr double kTightSilhouette = 0.99;
constexpr double kContrastFactor = 10.0;
constexpr double kContrastCrossCheck = 1e-12;
constexpr double kInteractionSs = 1e-12;
constexpr double kResidualSs = 1e-16;
constexpr double kTypeEquality = 1e-10;
constexpr int kAnovaNullRuns = 100;
constexpr int kAnovaMaxRejections = 10;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      if (!failed_.empty()) failed_ += "; ";
      failed_ += what;
    }
  }
  void note(const std::string& s) {
    if (!notes_.empty()) notes_ += ", ";
    notes_ += s;
  }
  [[nodiscard]] Outcome done() const {
    return {pass_, pass_ ? notes_ : failed_ + (notes_.empty() ? "" : " [" + notes_ + "]")};
  }

 private:
  bool pass_ = true;
  std::string failed_;
  std::string notes_;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  }
  return m;
}

GeneratedTrajectory rotation90(bool with_decay) {
  TrajectorySpec spec;
  spec.layers = 9;
  spec.rotations = {{std::numbers::pi / 2}};
  if (with_decay) {
    spec.reals = {0.5};
    spec.initial = Eigen::Vector3d(1, 0, 1);
  } else {
    spec.initial = Eigen::Vector2d(1, 0);
  }
  return gen_linear_trajectory(spec);
}

// ---------------------------------------------------------------------------

Outcome dmd_spectrum_recovery() {
  Checks c;
  const auto rot = analyze_trajectory(rotation90(false).trajectory);
  c.expect(rot.spectrum.has_value(), "rotation fit fell back");
  if (rot.spectrum) {
    const double err = oracle::match_spectra(rot.spectrum->eigenvalues,
                                             Eigen::Vector2cd(std::complex<double>(0, 1), std::complex<double>(0, -1)));
    c.expect(err <= kSpectrumTol, "rotation eigenvalues off by " + fmt(err));
    c.note("|lambda - (+-i)| = " + fmt(err));
  }
  const auto block = analyze_trajectory(rotation90(true).trajectory);
  const double dev = std::abs(std::abs(block.representation.stable_eigenvalue) - 1.0);
  c.expect(dev <= kStableTol, "selected |lambda_s| off by " + fmt(dev));
  c.note("||lambda_s| - 1| = " + fmt(dev));
  return c.done();
}

Outcome dmd_reference_equivalence() {
  Checks c;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> pick_l(3, 30), pick_d(2, 64);
  double worst_eig = 0.0, worst_mode = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int l = pick_l(rng), d = pick_d(rng);
    const Eigen::MatrixXd layers = gaussian(l, d, rng);
    const DmdSpectrum got = fit_dmd(build_snapshots({"r", layers}));
    const oracle::Dmd ref = oracle::dense_dmd(layers);
    if (got.rank != ref.rank) {
      c.expect(false, "rank mismatch at trial " + std::to_string(trial));
      continue;
    }
    std::vector<Eigen::Index> pairs;
    const double scale = std::max(1.0, ref.eigenvalues.cwiseAbs().maxCoeff());
    worst_eig = std::max(worst_eig, oracle::match_spectra(got.eigenvalues, ref.eigenvalues, &pairs) / scale);
    for (Eigen::Index i = 0; i < got.rank; ++i) {
      worst_mode = std::max(worst_mode,
                            oracle::mode_distance(got.modes.col(i), ref.modes.col(pairs[static_cast<std::size_t>(i)])));
    }
  }
  c.expect(worst_eig <= kOracleTol, "eigenvalues differ by " + fmt(worst_eig));
  c.expect(worst_mode <= kOracleTol, "modes differ by " + fmt(worst_mode));
  c.note("max eigenvalue diff " + fmt(worst_eig) + ", max mode diff " + fmt(worst_mode));
  return c.done();
}

Outcome stable_geometry() {
  Checks c;
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> pick_l(3, 30), pick_d(2, 64);
  std::uniform_real_distribution<double> pick_alpha(0.1, 10.0);
  double worst_cross = 0.0, worst_shift = 0.0, worst_scale = 0.0, worst_dir = 0.0;
  int fallbacks = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int l = pick_l(rng), d = pick_d(rng);
    const Eigen::MatrixXd layers = gaussian(l, d, rng);
    const EmbeddingTrajectory traj{"g", layers};
    const DepthDynamicsResult r = analyze_trajectory(traj);
    if (r.fallback != DynamicsFallback::None) {
      ++fallbacks;
      continue;
    }
    const SnapshotPair s = build_snapshots(traj);
    const Eigen::VectorXd dz = r.representation.z - s.mean;
    const Eigen::VectorXd& phi = r.representation.stable_mode;
    if (dz.norm() > 0.0) {
      worst_cross = std::max(worst_cross, (dz - phi.dot(dz) * phi).norm() / dz.norm());
    }

    const Eigen::RowVectorXd b = gaussian(1, d, rng);
    const Eigen::MatrixXd shifted_layers = layers.rowwise() + b;
    const DepthDynamicsResult sh = analyze_trajectory({"g", shifted_layers});
    if (sh.spectrum && r.spectrum) {
      worst_shift = std::max(worst_shift, oracle::match_spectra(sh.spectrum->eigenvalues, r.spectrum->eigenvalues));
      const Eigen::VectorXd& phi2 = sh.representation.stable_mode;
      worst_dir = std::max(worst_dir, std::min((phi2 - phi).norm(), (phi2 + phi).norm()));
    } else {
      c.expect(false, "shifted trajectory fell back");
    }

    const double alpha = pick_alpha(rng);
    const DepthDynamicsResult sc = analyze_trajectory({"g", alpha * layers});
    if (sc.spectrum && r.spectrum) {
      worst_scale = std::max(worst_scale, oracle::match_spectra(sc.spectrum->eigenvalues, r.spectrum->eigenvalues));
      const Eigen::VectorXd dz2 = sc.representation.z - build_snapshots({"g", alpha * layers}).mean;
      worst_scale = std::max(worst_scale, (dz2 - alpha * dz).norm() / std::max(1.0, alpha * dz.norm()));
    }
  }
  c.expect(fallbacks == 0, std::to_string(fallbacks) + " random trajectories fell back");
  c.expect(worst_cross <= kParallelTol, "cross component " + fmt(worst_cross));
  c.expect(worst_shift <= kShiftSpectrumTol, "shift changed the spectrum by " + fmt(worst_shift));
  c.expect(worst_dir <= kParallelTol, "shift changed phi_s by " + fmt(worst_dir));
  c.expect(worst_scale <= kParallelTol, "scaling broke invariance by " + fmt(worst_scale));
  c.note("cross " + fmt(worst_cross) + ", shift " + fmt(worst_shift) + "/" + fmt(worst_dir) + ", scale " +
         fmt(worst_scale));
  return c.done();
}

Outcome hrf_convolution() {
  Checks c;
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> pick_t(1, 300), pick_d(1, 8);
  std::uniform_real_distribution<double> pick_tr(0.5, 3.0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const double tr = pick_tr(rng);
    const FeatureSeries x{tr, gaussian(pick_t(rng), pick_d(rng), rng), false};
    const HrfParams p;
    const std::vector<double> h = resample_kernel(canonical_hrf(p), p.dt, tr);
    const Eigen::MatrixXd ref = oracle::direct_convolution(x.values, h);
    const Eigen::MatrixXd got = convolve_hrf(x, p).values;
    worst = std::max(worst, (got - ref).cwiseAbs().maxCoeff() / std::max(1.0, ref.cwiseAbs().maxCoeff()));
  }
  c.expect(worst <= kConvolutionTol, "brute force differs by " + fmt(worst));

  const HrfParams p;
  const std::vector<double> h = resample_kernel(canonical_hrf(p), p.dt, 2.0);
  FeatureSeries impulse{2.0, Eigen::MatrixXd::Zero(40, 1), false};
  impulse.values(0, 0) = 1.0;
  const Eigen::MatrixXd resp = convolve_hrf(impulse, p).values;
  bool exact = true;
  for (Eigen::Index t = 0; t < 40; ++t) {
    const double want = t < static_cast<Eigen::Index>(h.size()) ? h[static_cast<std::size_t>(t)] : 0.0;
    exact = exact && resp(t, 0) == want;
  }
  c.expect(exact, "impulse response differs from the resampled kernel");
  c.note("max rel diff " + fmt(worst) + ", impulse exact");
  return c.done();
}

Outcome encoding_recovery() {
  Checks c;
  std::mt19937_64 rng(11);
  // noiseless readouts through gen_roi_responses
  const FeatureSeries f{2.0, gaussian(100, 5, rng), true};
  const Eigen::MatrixXd w = gaussian(6, 5, rng);
  const GeneratedBrain brain = gen_roi_responses(f, {w, 0.0, 3});
  const AlignmentVector av = alignment_vector(f, brain.brain, {}, "m", Modality::Vision);
  c.expect(av.scores.minCoeff() >= kRecoveryFloor, "noiseless ROI scored " + fmt(av.scores.minCoeff()));
  c.note("min noiseless c " + fmt(av.scores.minCoeff()));

  int low = 0;
  for (int rep = 0; rep < kNullRuns; ++rep) {
    const Eigen::MatrixXd x = gaussian(100, 5, rng);
    const Eigen::VectorXd y = gaussian(100, 1, rng).col(0);
    if (cv_alignment_score(x, y, {}) < kNullCeiling) ++low;
  }
  c.expect(low >= kNullLowRequired, std::to_string(low) + "/100 null runs below 0.1");
  c.note(std::to_string(low) + "/100 null below 0.1");

  // perturbing a test block never changes that fold's fitted model
  const Eigen::MatrixXd x = gaussian(80, 4, rng);
  const Eigen::VectorXd y = x * gaussian(4, 1, rng).col(0) + gaussian(80, 1, rng).col(0);
  const CvResult base = cv_alignment(x, y, {});
  bool sealed = true;
  for (int fold = 0; fold < 5; ++fold) {
    Eigen::VectorXd bumped = y;
    for (Eigen::Index t = 0; t < 80; ++t) {
      if (base.fold_assignment[static_cast<std::size_t>(t)] == fold) bumped(t) = 1e3 * std::sin(static_cast<double>(t));
    }
    const CvResult r = cv_alignment(x, bumped, {});
    const FoldFit& a = base.folds[static_cast<std::size_t>(fold)];
    const FoldFit& b = r.folds[static_cast<std::size_t>(fold)];
    sealed = sealed && a.lambda == b.lambda && a.weights == b.weights && a.intercept == b.intercept;
  }
  c.expect(sealed, "test-block values leaked into a fold's fit");
  c.note(sealed ? "no leakage" : "leakage");
  return c.done();
}

Outcome snci_arithmetic() {
  Checks c;
  auto snci_of = [](const Eigen::MatrixXd& s) {
    ModalityGroup g;
    g.scores = s;
    return snci_map(g).snci;
  };
  Eigen::MatrixXd ex(2, 1);
  ex << 0.2, 0.4;
  const double v = snci_of(ex)(0);
  c.expect(std::abs(v - kSnciExample) <= kSnciExampleTol, "{0.2, 0.4} gave " + fmt(v));

  Eigen::MatrixXd zero(2, 1);
  zero << -0.3, 0.3;
  c.expect(snci_of(zero)(0) == 0.5, "mu = 0 did not give exactly 0.5");

  const double sat = snci_of(Eigen::MatrixXd::Constant(4, 1, 0.2))(0);
  c.expect(sat >= 1.0 - kSaturationTol, "saturation gave " + fmt(sat));

  bool monotone = true;
  const double mus[] = {0.01, 0.02, 0.04, 0.06, 0.1};
  const double sigmas[] = {0.02, 0.05, 0.1, 0.3};
  auto at = [&](double mu, double sig) {
    Eigen::MatrixXd s(2, 1);
    s << mu - sig, mu + sig;
    return snci_of(s)(0);
  };
  for (double sig : sigmas) {
    for (std::size_t i = 1; i < std::size(mus); ++i) monotone = monotone && at(mus[i], sig) > at(mus[i - 1], sig);
  }
  for (double mu : mus) {
    for (std::size_t i = 1; i < std::size(sigmas); ++i) monotone = monotone && at(mu, sigmas[i]) < at(mu, sigmas[i - 1]);
  }
  c.expect(monotone, "monotonicity grid failed");
  c.note("{0.2,0.4} -> " + fmt(v) + ", saturation " + fmt(1.0 - sat) + " below 1");
  return c.done();
}

Outcome permanova_criterion() {
  Checks c;
  ClusterSpec spec;  // 2 modalities x 5 models
  spec.separation_deg = 45.0;
  spec.dispersion = 0.002;
  spec.seed = 1;
  const GeneratedClusters clusters = gen_modality_clusters(spec);
  const DistanceMatrix d = cosine_distance_matrix(clusters.scores);
  const PermanovaResult sep = permanova(d, clusters.labels, {.n_permutations = 999, .seed = 1});
  const PermanovaResult sampled =
      permanova(d, clusters.labels, {.n_permutations = 999, .seed = 1, .exact_when_small = false});
  // Only 252 distinct labelings of 5+5 exist and two of them reproduce the
  // observed partition, so no test can go below 2/252.
  c.expect(sep.test.p_value <= kPermanovaFloor,
           "separated 10-model p = " + fmt(sep.test.p_value) + " (exact over " + std::to_string(sep.test.evaluated) +
               " labelings; sampled 999 gives " + fmt(sampled.test.p_value) + "; floor 2/252 = " + fmt(2.0 / 252.0) + ")");

  std::mt19937_64 rng(3);
  bool exhaustive = true;
  for (int rep = 0; rep < 20; ++rep) {
    const DistanceMatrix d4 = euclidean_distance_matrix(gaussian(4, 3, rng));
    const std::vector<std::string> labels{"a", "b", "b", "a"};
    const double got = permanova(d4, labels, {.n_permutations = 999, .seed = 1}).test.p_value;
    exhaustive = exhaustive && got == oracle::exhaustive_permanova_p(d4.values, make_grouping(labels).ids);
  }
  c.expect(exhaustive, "n=4 differs from exhaustive enumeration");

  int calibrated = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const DistanceMatrix dn = euclidean_distance_matrix(gaussian(20, 5, rng));
    std::vector<std::string> labels(10, "vision");
    labels.resize(20, "audio");
    std::shuffle(labels.begin(), labels.end(), rng);
    if (permanova(dn, labels, {.n_permutations = 999, .seed = static_cast<std::uint64_t>(rep)}).test.p_value > 0.05) {
      ++calibrated;
    }
  }
  c.expect(calibrated >= kPermanovaCalibrated, std::to_string(calibrated) + "/100 null runs with p > 0.05");
  c.note("n=4 exact, null " + std::to_string(calibrated) + "/100 p > 0.05");
  return c.done();
}

Outcome silhouette_criterion() {
  Checks c;
  DistanceMatrix d;
  d.values.resize(4, 4);
  d.values << 0.0, 0.2, 1.0, 1.0,  //
      0.2, 0.0, 1.0, 1.0,          //
      1.0, 1.0, 0.0, 0.2,          //
      1.0, 1.0, 0.2, 0.0;
  const std::vector<std::string> labels{"1", "1", "2", "2"};
  const double s4 = silhouette(d, labels).mean;
  c.expect(s4 == 0.8, "4-point case gave " + fmt(s4));

  ClusterSpec spec;
  spec.separation_deg = 60.0;
  spec.dispersion = 0.001;
  spec.seed = 9;
  const GeneratedClusters tight = gen_modality_clusters(spec);
  const DistanceMatrix dt = cosine_distance_matrix(tight.scores);
  const DistanceContrast dc = distance_contrast(dt, tight.labels);
  const SilhouetteResult st = silhouette(dt, tight.labels, {.n_permutations = 999, .seed = 2});
  c.expect(st.mean >= kTightSilhouette, "tight-far S = " + fmt(st.mean));
  c.note("4-point S = 0.8, tight-far S = " + fmt(st.mean) + " (intra " + fmt(dc.intra_mean) + ", inter " +
         fmt(dc.inter_mean) + ")");
  return c.done();
}

Outcome distance_contrast_criterion() {
  Checks c;
  ClusterSpec spec;
  spec.modalities = {"vision", "audio", "language"};
  spec.seed = 4;
  const GeneratedClusters g = gen_modality_clusters(spec);
  const DistanceMatrix d = cosine_distance_matrix(g.scores);
  const DistanceContrast dc = distance_contrast(d, g.labels);

  double intra = 0.0, inter = 0.0;
  std::size_t ni = 0, nx = 0;
  const Eigen::Index n = g.scores.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dij = 1.0 - g.scores.row(i).dot(g.scores.row(j)) / (g.scores.row(i).norm() * g.scores.row(j).norm());
      if (g.labels[static_cast<std::size_t>(i)] == g.labels[static_cast<std::size_t>(j)]) {
        intra += dij;
        ++ni;
      } else {
        inter += dij;
        ++nx;
      }
    }
  }
  intra /= static_cast<double>(ni);
  inter /= static_cast<double>(nx);
  c.expect(dc.intra_pairs == ni && dc.inter_pairs == nx, "pair counts differ");
  c.expect(std::abs(dc.intra_mean - intra) <= kContrastCrossCheck * std::max(1.0, intra), "intra mean differs");
  c.expect(std::abs(dc.inter_mean - inter) <= kContrastCrossCheck * std::max(1.0, inter), "inter mean differs");
  c.expect(dc.inter_mean >= kContrastFactor * dc.intra_mean,
           "inter/intra only " + fmt(dc.inter_mean / dc.intra_mean));
  c.note("intra " + fmt(dc.intra_mean) + ", inter " + fmt(dc.inter_mean) + ", ratio " +
         fmt(dc.inter_mean / dc.intra_mean));
  return c.done();
}

Outcome anova_criterion() {
  Checks c;
  const std::string a_names[] = {"vision", "audio"};
  const std::string b_names[] = {"Visual", "Default"};
  std::vector<AnovaObservation> obs;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      for (int r = 0; r < 3; ++r) obs.push_back({1.0 + 0.5 * i - 0.25 * j, a_names[i], b_names[j]});
    }
  }
  const AnovaTable t = two_way_anova(obs);
  c.expect(t.rows[2].sum_of_squares <= kInteractionSs, "interaction SS " + fmt(t.rows[2].sum_of_squares));
  c.expect(t.rows[3].sum_of_squares <= kResidualSs, "residual SS " + fmt(t.rows[3].sum_of_squares));

  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise;
  const std::string a3[] = {"vision", "audio", "language"};
  const std::string b4[] = {"Visual", "Default", "Limbic", "Control"};
  double worst = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<AnovaObservation> bal;
    for (const auto& a : a3) {
      for (const auto& b : b4) {
        for (int r = 0; r < 4; ++r) bal.push_back({noise(rng) + (a == "audio" ? 1.0 : 0.0), a, b});
      }
    }
    const AnovaTable t2 = two_way_anova(bal, SumOfSquares::TypeII);
    const AnovaTable t1 = two_way_anova(bal, SumOfSquares::TypeI);
    for (std::size_t k = 0; k < 4; ++k) worst = std::max(worst, std::abs(t2.rows[k].sum_of_squares - t1.rows[k].sum_of_squares));
  }
  c.expect(worst <= kTypeEquality, "Type II vs Type I differ by " + fmt(worst));

  int rejections[3] = {0, 0, 0};
  for (int rep = 0; rep < kAnovaNullRuns; ++rep) {
    std::vector<AnovaObservation> null_obs;
    for (const auto& a : a_names) {
      for (const auto& b : b_names) {
        for (int r = 0; r < 10; ++r) null_obs.push_back({noise(rng), a, b});
      }
    }
    const AnovaTable tn = two_way_anova(null_obs);
    for (int k = 0; k < 3; ++k) rejections[k] += tn.rows[static_cast<std::size_t>(k)].p_value < 0.05;
  }
  for (int k = 0; k < 3; ++k) {
    c.expect(rejections[k] <= kAnovaMaxRejections, "row " + std::to_string(k) + " rejected " +
                                                       std::to_string(rejections[k]) + "/100 null runs");
  }
  c.note("interaction SS " + fmt(t.rows[2].sum_of_squares) + ", residual SS " + fmt(t.rows[3].sum_of_squares) +
         ", null rejections " + std::to_string(rejections[0]) + "/" + std::to_string(rejections[1]) + "/" +
         std::to_string(rejections[2]));
  return c.done();
}

Outcome end_to_end() {
  Checks c;
  const fs::path root = fs::temp_directory_path() / "nfas_acceptance_e2e";
  fs::remove_all(root);
  const WorkspaceSummary ws = make_workspace(root / "ws", {});
  PipelineOptions opts;
  opts.output_dir = root / "run1";
  const RunReport first = run_pipeline(ws.manifest, opts);
  opts.output_dir = root / "run2";
  const RunReport second = run_pipeline(ws.manifest, opts);

  std::map<std::string, std::string> a, b;
  for (const auto& e : first.inventory) a[e.path] = e.sha256;
  for (const auto& e : second.inventory) b[e.path] = e.sha256;
  c.expect(a == b, "rerun checksums differ");

  std::vector<std::string> wanted = {"stats/pca.csv", "stats/pca.svg", "stats/network_means.csv", "stats/anova.csv"};
  for (const char* m : {"vision", "audio", "language"}) wanted.push_back("snci/" + std::string(m) + ".csv");
  for (const auto& id : ws.model_ids) wanted.push_back("encode/" + id + ".csv");
  for (const auto& f : wanted) c.expect(a.count(f) == 1, f + " missing");

  const auto perm = std::find_if(first.inventory.begin(), first.inventory.end(),
                                 [](const InventoryEntry& e) { return e.path == "stats/permanova.json"; });
  c.expect(perm != first.inventory.end(), "permanova.json missing");
  c.note(std::to_string(a.size()) + " files, checksums identical across reruns");
  fs::remove_all(root);
  return c.done();
}

struct Criterion {
  const char* name;
  double limit_seconds;  // 0: no limit
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"dmd-spectrum-recovery", 1.0, dmd_spectrum_recovery},
      {"dmd-reference-equivalence", 10.0, dmd_reference_equivalence},
      {"stable-representation-geometry", 0.0, stable_geometry},
      {"hrf-convolution", 0.0, hrf_convolution},
      {"encoding-recovery", 0.0, encoding_recovery},
      {"snci-arithmetic", 0.0, snci_arithmetic},
      {"permanova", 30.0, permanova_criterion},
      {"silhouette", 0.0, silhouette_criterion},
      {"distance-contrast", 0.0, distance_contrast_criterion},
      {"anova", 0.0, anova_criterion},
      {"end-to-end", 60.0, end_to_end},
  };

  int failures = 0;
  for (const auto& cr : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (cr.limit_seconds > 0.0 && secs > cr.limit_seconds) {
      o.pass = false;
      o.detail += " [over the " + fmt(cr.limit_seconds) + " s limit]";
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", cr.name, secs, o.detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
