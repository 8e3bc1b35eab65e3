#include "nfas/synth.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <Eigen/QR>

#include "nfas/atlas.hpp"
#include "nfas/error.hpp"
#include "nfas/manifest.hpp"
#include "nfas/random.hpp"
#include "nfas/tensor_store.hpp"

namespace nfas {
namespace {

// cos(pi/2) is 6e-17, not 0; snapping keeps quarter turns exact.
double snap_unit(double v) {
  for (double r : {-1.0, 0.0, 1.0}) {
    if (std::abs(v - r) <= 1e-15) return r;
  }
  return v;
}

Eigen::VectorXd gaussian_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

std::string zero_pad(int value, int width) {
  std::string s = std::to_string(value);
  if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
  return s;
}

std::string_view network_abbrev(Network n) {
  switch (n) {
    case Network::Visual: return "Vis";
    case Network::Somatomotor: return "SomMot";
    case Network::DorsalAttention: return "DorsAttn";
    case Network::VentralAttention: return "SalVentAttn";
    case Network::Limbic: return "Limbic";
    case Network::Control: return "Cont";
    case Network::Default: return "Default";
  }
  return "?";
}

}  // namespace

GeneratedTrajectory gen_linear_trajectory(const TrajectorySpec& spec) {
  const auto n_rot = static_cast<Eigen::Index>(spec.rotations.size());
  const Eigen::Index n = 2 * n_rot + static_cast<Eigen::Index>(spec.reals.size());
  if (n == 0) throw ValidationError("trajectory spec needs at least one eigenvalue");
  if (spec.layers < 2) throw ValidationError("trajectory spec needs at least 2 layers");
  if (spec.initial.size() != n) {
    throw ValidationError("initial state has " + std::to_string(spec.initial.size()) +
                          " coordinates, generator has " + std::to_string(n));
  }

  GeneratedTrajectory out;
  out.generator = Eigen::MatrixXd::Zero(n, n);
  out.spectrum.resize(n);
  double max_abs = 0.0;
  for (Eigen::Index k = 0; k < n_rot; ++k) {
    const auto& rot = spec.rotations[static_cast<std::size_t>(k)];
    const double c = snap_unit(std::cos(rot.angle));
    const double s = snap_unit(std::sin(rot.angle));
    out.generator(2 * k, 2 * k) = rot.radius * c;
    out.generator(2 * k, 2 * k + 1) = -rot.radius * s;
    out.generator(2 * k + 1, 2 * k) = rot.radius * s;
    out.generator(2 * k + 1, 2 * k + 1) = rot.radius * c;
    out.spectrum(2 * k) = {rot.radius * c, rot.radius * s};
    out.spectrum(2 * k + 1) = {rot.radius * c, -rot.radius * s};
    max_abs = std::max(max_abs, std::abs(rot.radius));
  }
  for (std::size_t j = 0; j < spec.reals.size(); ++j) {
    const Eigen::Index k = 2 * n_rot + static_cast<Eigen::Index>(j);
    out.generator(k, k) = spec.reals[j];
    out.spectrum(k) = spec.reals[j];
    max_abs = std::max(max_abs, std::abs(spec.reals[j]));
  }
  if (max_abs > 10.0 && spec.layers > 30) {
    throw ValidationError("eigenvalue magnitude above 10 over more than 30 layers would overflow");
  }

  const bool identity_basis = spec.basis.size() == 0;
  if (!identity_basis && spec.basis.cols() != n) {
    throw ValidationError("basis must have one column per generator coordinate");
  }
  const Eigen::Index d = identity_basis ? n : spec.basis.rows();
  if (spec.offset.size() != 0 && spec.offset.size() != d) {
    throw ValidationError("offset length does not match the embedding dimension");
  }

  out.trajectory.stimulus_id = spec.stimulus_id;
  out.trajectory.layers.resize(spec.layers, d);
  Eigen::VectorXd state = spec.initial;
  for (int l = 0; l < spec.layers; ++l) {
    Eigen::VectorXd x = identity_basis ? state : Eigen::VectorXd(spec.basis * state);
    if (spec.offset.size() != 0) x += spec.offset;
    out.trajectory.layers.row(l) = x.transpose();
    // Block-wise update so that exact generators stay exact.
    Eigen::VectorXd next(n);
    for (Eigen::Index k = 0; k < n_rot; ++k) {
      const double a = state(2 * k);
      const double b = state(2 * k + 1);
      next(2 * k) = out.generator(2 * k, 2 * k) * a + out.generator(2 * k, 2 * k + 1) * b;
      next(2 * k + 1) = out.generator(2 * k + 1, 2 * k) * a + out.generator(2 * k + 1, 2 * k + 1) * b;
    }
    for (Eigen::Index k = 2 * n_rot; k < n; ++k) next(k) = out.generator(k, k) * state(k);
    state = next;
  }
  if (!out.trajectory.layers.allFinite()) throw ValidationError("generated trajectory is not finite");
  return out;
}

Eigen::MatrixXd random_orthonormal_basis(Eigen::Index d, Eigen::Index n, std::uint64_t seed) {
  if (n < 1 || n > d) throw ValidationError("orthonormal basis needs 1 <= n <= d");
  auto rng = make_stream(seed, "basis");
  Eigen::MatrixXd g(d, n);
  for (Eigen::Index j = 0; j < n; ++j) g.col(j) = gaussian_vector(d, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, n);
  return q;
}

GeneratedBrain gen_roi_responses(const FeatureSeries& features, const RoiResponseSpec& spec) {
  if (!features.convolved) throw ValidationError("ROI responses are generated from convolved features");
  if (spec.weights.cols() != features.dim()) {
    throw ValidationError("readout weights have " + std::to_string(spec.weights.cols()) +
                          " columns, features have " + std::to_string(features.dim()));
  }
  if (!(spec.noise_sigma >= 0.0)) throw ValidationError("noise sigma must be non-negative");

  GeneratedBrain out;
  out.weights = spec.weights;
  out.brain.tr = features.tr;
  out.brain.values = spec.weights * features.values.transpose();
  if (spec.noise_sigma > 0.0) {
    for (Eigen::Index r = 0; r < out.brain.values.rows(); ++r) {
      auto rng = make_stream(spec.seed, "roi-noise", static_cast<std::uint64_t>(r));
      out.brain.values.row(r) += spec.noise_sigma * gaussian_vector(out.brain.values.cols(), rng).transpose();
    }
  }
  return out;
}

GeneratedClusters gen_modality_clusters(const ClusterSpec& spec) {
  const auto k_groups = static_cast<Eigen::Index>(spec.modalities.size());
  if (k_groups < 2) throw ValidationError("cluster spec needs at least 2 modalities");
  if (spec.models_per_modality < 1) throw ValidationError("models_per_modality must be positive");
  if (spec.rois < k_groups + 1) throw ValidationError("cluster spec needs more ROIs than modalities");
  if (!(spec.separation_deg > 0.0 && spec.separation_deg < 90.0)) {
    throw ValidationError("separation angle must lie in (0, 90) degrees");
  }
  if (!(spec.dispersion >= 0.0)) throw ValidationError("dispersion must be non-negative");

  const Eigen::Index r = spec.rois;
  const double cos_theta = std::cos(spec.separation_deg * std::numbers::pi / 180.0);
  const double spread = std::sqrt(1.0 / cos_theta - 1.0);
  const double root_r = std::sqrt(static_cast<double>(r));
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(r, 1.0 / root_r);

  // Directions orthonormal to each other and to the constant vector, so every
  // centroid pair meets at the same angle.
  std::vector<Eigen::VectorXd> dirs;
  for (Eigen::Index k = 0; k < k_groups; ++k) {
    auto rng = make_stream(spec.seed, "centroid", static_cast<std::uint64_t>(k));
    Eigen::VectorXd d = gaussian_vector(r, rng);
    for (int pass = 0; pass < 2; ++pass) {
      d -= u.dot(d) * u;
      for (const auto& prev : dirs) d -= prev.dot(d) * prev;
    }
    d.normalize();
    dirs.push_back(d);
  }

  GeneratedClusters out;
  out.centroids.resize(k_groups, r);
  for (Eigen::Index k = 0; k < k_groups; ++k) {
    out.centroids.row(k) = (spec.level * (Eigen::VectorXd::Ones(r) + spread * root_r * dirs[k])).transpose();
  }

  const Eigen::Index m = k_groups * spec.models_per_modality;
  out.scores.resize(m, r);
  std::size_t clipped = 0;
  Eigen::Index row = 0;
  for (Eigen::Index k = 0; k < k_groups; ++k) {
    for (int j = 0; j < spec.models_per_modality; ++j, ++row) {
      auto rng = make_stream(spec.seed, "member", static_cast<std::uint64_t>(row));
      Eigen::VectorXd v = out.centroids.row(k).transpose();
      if (spec.dispersion > 0.0) v += spec.dispersion * gaussian_vector(r, rng);
      for (Eigen::Index i = 0; i < r; ++i) {
        if (v(i) < 0.0 || v(i) > 1.0) {
          ++clipped;
          v(i) = std::clamp(v(i), 0.0, 1.0);
        }
      }
      out.scores.row(row) = v.transpose();
      out.labels.push_back(spec.modalities[static_cast<std::size_t>(k)]);
    }
  }
  out.saturated_fraction = static_cast<double>(clipped) / static_cast<double>(m * r);
  if (out.saturated_fraction > 0.5) {
    throw ValidationError("clipping to [0, 1] saturates " +
                          std::to_string(static_cast<int>(out.saturated_fraction * 100)) +
                          "% of scores; reduce dispersion or separation");
  }
  return out;
}

WorkspaceSummary make_workspace(const std::filesystem::path& dir, const WorkspaceSpec& spec) {
  if (spec.models_per_modality < 1 || spec.stimuli < 1 || spec.layers < 2 || spec.dim < 6 ||
      spec.rois_per_network < 1 || spec.volumes < 2 || !(spec.tr > 0.0) ||
      !(spec.stimulus_interval > 0.0)) {
    throw ValidationError("invalid workspace spec");
  }
  const double last_onset = (spec.stimuli - 1) * spec.stimulus_interval;
  if (last_onset >= spec.volumes * spec.tr) {
    throw ValidationError("stimulus schedule runs past the end of the scan");
  }

  constexpr int kLatentPerModality = 2;
  constexpr int kModalities = 3;
  constexpr int kLatent = kLatentPerModality * kModalities;
  const Modality modalities[kModalities] = {Modality::Vision, Modality::Audio, Modality::Language};

  std::error_code ec;
  std::filesystem::create_directories(dir / "trajectories", ec);
  std::filesystem::create_directories(dir / "brain", ec);
  if (ec) throw IoError("cannot create workspace " + dir.string() + ": " + ec.message());

  // Stimulus content: one small latent block per modality.
  std::vector<Eigen::VectorXd> latent(static_cast<std::size_t>(spec.stimuli));
  std::vector<std::string> stim_ids;
  std::vector<double> onsets;
  for (int s = 0; s < spec.stimuli; ++s) {
    auto rng = make_stream(spec.seed, "latent", static_cast<std::uint64_t>(s));
    latent[static_cast<std::size_t>(s)] = gaussian_vector(kLatent, rng);
    stim_ids.push_back("s" + zero_pad(s, 3));
    onsets.push_back(s * spec.stimulus_interval);
  }

  Manifest manifest;
  manifest.seed = spec.seed;
  manifest.params.n_permutations = spec.n_permutations;
  WorkspaceSummary summary;

  const Eigen::Index d = spec.dim;
  for (int mi = 0; mi < kModalities; ++mi) {
    for (int j = 0; j < spec.models_per_modality; ++j) {
      const std::uint64_t model_index = static_cast<std::uint64_t>(mi * spec.models_per_modality + j);
      ModelEntry entry;
      entry.modality = modalities[mi];
      entry.id = std::string(modality_name(entry.modality)) + "-" + std::to_string(j);

      // Strong readout of the model's own latent block, faint leakage of the
      // others, plus model-specific nuisance.
      auto rng = make_stream(spec.seed, "model", model_index);
      Eigen::MatrixXd content(d, kLatent);
      for (int c = 0; c < kLatent; ++c) {
        const double scale = (c / kLatentPerModality == mi) ? 1.0 : 0.05;
        content.col(c) = scale * gaussian_vector(d, rng);
      }
      std::uniform_real_distribution<double> angle_dist(0.3, 1.2);
      TrajectorySpec tspec;
      tspec.layers = spec.layers;
      tspec.rotations = {{angle_dist(rng), 1.0}};
      tspec.reals = {0.7, 0.4};
      tspec.initial = Eigen::Vector4d(1.0, 0.0, 1.0, 1.0);
      tspec.basis = random_orthonormal_basis(d, 4, derive_seed(spec.seed, "model-basis", model_index));

      const auto model_dir = dir / "trajectories" / entry.id;
      std::filesystem::create_directories(model_dir, ec);
      if (ec) throw IoError("cannot create " + model_dir.string());
      for (int s = 0; s < spec.stimuli; ++s) {
        auto noise_rng = make_stream(spec.seed, "nuisance", model_index * 100003ULL + static_cast<std::uint64_t>(s));
        tspec.offset = content * latent[static_cast<std::size_t>(s)] +
                       spec.feature_noise * gaussian_vector(d, noise_rng);
        tspec.stimulus_id = stim_ids[static_cast<std::size_t>(s)];
        const auto gen = gen_linear_trajectory(tspec);
        const auto rel = std::filesystem::path("trajectories") / entry.id / (tspec.stimulus_id + ".nft");
        write_matrix(dir / rel, gen.trajectory.layers);
        entry.stimuli.push_back({tspec.stimulus_id, rel});
      }
      summary.model_ids.push_back(entry.id);
      manifest.models.push_back(std::move(entry));
    }
  }

  // Brain: each network reads out one modality's latent block (Limbic reads
  // all of them) through the canonical HRF.
  std::vector<Eigen::VectorXd> held(latent.begin(), latent.end());
  const FeatureSeries design = align_to_volumes(onsets, held, spec.tr, spec.volumes);
  const FeatureSeries convolved = convolve_hrf(design, HrfParams{});

  AtlasTable atlas;
  const Eigen::Index r_total = static_cast<Eigen::Index>(kNetworkCount) * spec.rois_per_network;
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(r_total, kLatent);
  auto wrng = make_stream(spec.seed, "readout");
  std::normal_distribution<double> normal(0.0, 1.0);
  int roi = 0;
  for (Network net : kAllNetworks) {
    int block = -1;
    switch (net) {
      case Network::Visual: block = 0; break;
      case Network::Somatomotor:
      case Network::DorsalAttention:
      case Network::VentralAttention: block = 1; break;
      case Network::Control:
      case Network::Default: block = 2; break;
      case Network::Limbic: block = -1; break;
    }
    for (int k = 0; k < spec.rois_per_network; ++k, ++roi) {
      for (int c = 0; c < kLatent; ++c) {
        const bool driven = block < 0 || c / kLatentPerModality == block;
        const double w = normal(wrng);
        if (driven) weights(roi, c) = block < 0 ? 0.5 * w : w;
      }
      AtlasRow row;
      row.roi_index = roi;
      row.hemisphere = (k % 2 == 0) ? Hemisphere::Left : Hemisphere::Right;
      row.roi_name = std::string(row.hemisphere == Hemisphere::Left ? "LH_" : "RH_") +
                     std::string(network_abbrev(net)) + "_" + std::to_string(k / 2 + 1);
      row.network = net;
      atlas.rows.push_back(row);
    }
  }
  const auto brain = gen_roi_responses(convolved, {weights, spec.brain_noise, derive_seed(spec.seed, "brain")});
  write_matrix(dir / "brain" / "roi_timeseries.nft", brain.brain.values);
  write_atlas(dir / "brain" / "atlas.csv", atlas);

  manifest.brain.roi_timeseries = "brain/roi_timeseries.nft";
  manifest.brain.atlas = "brain/atlas.csv";
  manifest.brain.tr = spec.tr;
  for (int s = 0; s < spec.stimuli; ++s) {
    manifest.brain.events.push_back({stim_ids[static_cast<std::size_t>(s)], onsets[static_cast<std::size_t>(s)]});
  }

  summary.manifest = dir / "manifest.json";
  summary.rois = r_total;
  std::ofstream out(summary.manifest, std::ios::binary);
  if (!out) throw IoError("cannot write " + summary.manifest.string());
  out << manifest_to_json(manifest);
  if (!out) throw IoError("failed writing " + summary.manifest.string());
  return summary;
}

}  // namespace nfas
