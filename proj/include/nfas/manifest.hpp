#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nfas/depth_dynamics.hpp"
#include "nfas/encoding.hpp"
#include "nfas/geometry_stats.hpp"
#include "nfas/hemodynamics.hpp"
#include "nfas/modality.hpp"

namespace nfas {

struct StimulusEntry {
  std::string id;
  std::filesystem::path trajectory;  ///< NFT1 tensor with dims [L, D]
};

struct ModelEntry {
  std::string id;
  Modality modality = Modality::Vision;
  std::vector<StimulusEntry> stimuli;
};

struct StimulusEvent {
  std::string stimulus;
  double onset = 0.0;  ///< seconds from scan start
};

struct BrainEntry {
  std::filesystem::path roi_timeseries;  ///< NFT1 tensor with dims [R, T]
  double tr = 0.0;
  std::filesystem::path atlas;
  std::vector<StimulusEvent> events;
};

enum class SilhouetteSpace { Raw, Pca };

struct PipelineParams {
  double svd_rel_tol = kDefaultSvdRelTol;
  std::vector<double> ridge_grid = default_lambda_grid();
  int cv_folds = 5;
  int n_permutations = 999;
  double epsilon = 1e-8;
  bool sample_std = false;
  bool joint_zscore = false;
  int pca_components = 2;
  DistanceMetric distance_metric = DistanceMetric::Cosine;
  SilhouetteSpace silhouette_space = SilhouetteSpace::Raw;
  HrfParams hrf;
};

/// Paths are stored as given; resolve() makes them absolute against the
/// manifest's directory.
struct Manifest {
  std::vector<ModelEntry> models;
  BrainEntry brain;
  PipelineParams params;
  std::uint64_t seed = 0;
  std::filesystem::path base_dir;

  [[nodiscard]] std::filesystem::path resolve(const std::filesystem::path& p) const;
};

/// Parses and validates a manifest document. Throws ValidationError.
[[nodiscard]] Manifest parse_manifest(const std::string& json_text,
                                      const std::filesystem::path& base_dir);

/// Loads a manifest and checks that every referenced file exists.
[[nodiscard]] Manifest load_manifest(const std::filesystem::path& path);

[[nodiscard]] std::string manifest_to_json(const Manifest& m);

/// Model ids double as file names, so they are restricted to [A-Za-z0-9._-].
[[nodiscard]] bool is_safe_identifier(const std::string& id);

}  // namespace nfas
