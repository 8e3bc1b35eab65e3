#pragma once

// Manifest-driven batch pipeline: dmd -> hrf -> encode -> snci -> stats.
//
// Every stage reads its inputs from the previous stage's files under the
// output directory, so any suffix of the chain can be rerun on its own.
//
//   dmd/<model>/<stimulus>.nft       z per stimulus, [D]
//   dmd/<model>/<stimulus>.spectrum.json   (--emit-spectra)
//   dmd/index.json
//   hrf/<model>.nft, hrf/<model>.json       convolved features [T, D]
//   encode/alignment.nft, alignment.json    scores [M, R]
//   encode/<model>.csv                      roi_index,score
//   snci/<modality>.csv, snci/index.json    roi_index,mu,sigma,snci,snci_z
//   stats/...                               see emit_reports
//   run_report.json

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "nfas/geometry_stats.hpp"
#include "nfas/manifest.hpp"
#include "nfas/modality.hpp"

namespace nfas {

enum class Stage { Dmd, Hrf, Encode, Snci, Stats };

inline constexpr Stage kAllStages[] = {Stage::Dmd, Stage::Hrf, Stage::Encode, Stage::Snci,
                                       Stage::Stats};

[[nodiscard]] std::string_view stage_name(Stage s);

/// Comma-separated stage names, or "all". Result is in pipeline order.
[[nodiscard]] std::vector<Stage> parse_stage_filter(std::string_view filter);

struct PipelineOptions {
  std::filesystem::path output_dir;
  std::vector<Stage> stages = {std::begin(kAllStages), std::end(kAllStages)};
  int jobs = 1;
  /// Numerical degeneracies (fallback trajectories, degenerate ROIs, skipped
  /// folds) abort the run instead of being recorded as warnings.
  bool strict = false;
  bool emit_spectra = false;
  bool allow_nonfinite = false;
  std::optional<std::uint64_t> seed_override;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct InventoryEntry {
  std::string path;  ///< relative to the output directory, '/' separated
  std::uint64_t bytes = 0;
  std::string sha256;
};

struct RunReport {
  std::string manifest_sha256;
  std::uint64_t seed = 0;
  std::vector<StageTiming> timings;
  std::vector<std::string> warnings;
  std::vector<InventoryEntry> inventory;
};

[[nodiscard]] std::string report_to_json(const RunReport& report);

/// Everything the stats stage computes; input to emit_reports.
struct StatsResults {
  std::vector<std::string> model_ids;
  std::vector<Modality> modalities;
  Eigen::MatrixXd alignment;  ///< M x R
  PcaEmbedding pca;
  DistanceMatrix distances;
  DistanceContrast contrast;
  PermanovaResult permanova;
  SilhouetteResult silhouette;
  SilhouetteSpace silhouette_space = SilhouetteSpace::Raw;
  struct NetworkSummary {
    Modality modality = Modality::Vision;
    NetworkMeans means;
    std::array<int, kNetworkCount> roi_counts{};
  };
  std::vector<NetworkSummary> networks;
  AnovaTable anova;
};

/// Writes stats/pca.csv, pca.svg, permanova.json, silhouette.json,
/// distances.json, network_means.csv and anova.csv. Returns the written
/// paths. Throws ValidationError on empty results.
std::vector<std::filesystem::path> emit_reports(const StatsResults& results,
                                                const std::filesystem::path& output_dir);

/// Runs the selected stages. On failure a `.partial` marker holding the
/// error is left in the output directory and the error is rethrown with the
/// stage name prefixed.
RunReport run_pipeline(const std::filesystem::path& manifest_path, const PipelineOptions& options);

/// Loads the manifest and every referenced tensor and checks their shapes
/// against each other without writing anything. Returns a short summary.
std::vector<std::string> validate_inputs(const std::filesystem::path& manifest_path,
                                         bool allow_nonfinite = false);

}  // namespace nfas
