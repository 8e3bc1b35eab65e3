#pragma once

// Statistics over the alignment space: distances between models, a PCA
// embedding, permutation tests of modality grouping (PERMANOVA, silhouette),
// network-level aggregation and a two-way ANOVA.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nfas/atlas.hpp"

namespace nfas {

enum class DistanceMetric { Cosine, Euclidean };

struct DistanceMatrix {
  Eigen::MatrixXd values;  ///< n x n, symmetric, zero diagonal
  DistanceMetric metric = DistanceMetric::Cosine;

  [[nodiscard]] Eigen::Index size() const { return values.rows(); }
};

/// Rows of `vectors` are the points. `names`, when given, label zero-norm
/// rows in the error message.
[[nodiscard]] DistanceMatrix cosine_distance_matrix(const Eigen::MatrixXd& vectors,
                                                    std::span<const std::string> names = {});
[[nodiscard]] DistanceMatrix euclidean_distance_matrix(const Eigen::MatrixXd& vectors);
[[nodiscard]] DistanceMatrix distance_matrix(const Eigen::MatrixXd& vectors, DistanceMetric metric,
                                             std::span<const std::string> names = {});

struct PcaEmbedding {
  Eigen::VectorXd mean;                      ///< R, column means of the input
  Eigen::MatrixXd components;                ///< k x R, orthonormal rows
  Eigen::VectorXd explained_variance_ratio;  ///< k, non-increasing
  Eigen::MatrixXd coordinates;               ///< M x k
};

/// Component signs are fixed so each component's largest-magnitude loading
/// is positive.
[[nodiscard]] PcaEmbedding pca_embed(const Eigen::MatrixXd& scores, Eigen::Index k);

/// Group labels mapped to dense ids in order of first appearance, so only the
/// partition (not the label names) affects any statistic.
struct Grouping {
  std::vector<int> ids;
  std::vector<std::string> names;

  [[nodiscard]] int group_count() const { return static_cast<int>(names.size()); }
  [[nodiscard]] std::vector<int> sizes() const;
};

[[nodiscard]] Grouping make_grouping(std::span<const std::string> labels);

struct PermutationConfig {
  int n_permutations = 999;
  std::uint64_t seed = 0;
  int jobs = 1;
  /// Enumerate every distinct labeling instead of sampling when there are no
  /// more of them than n_permutations.
  bool exact_when_small = true;
};

struct PermutationSummary {
  double p_value = 1.0;
  int n_permutations = 0;
  std::uint64_t seed = 0;
  bool exact = false;
  /// Labelings evaluated: n_permutations when sampling, all distinct
  /// labelings when exact.
  std::uint64_t evaluated = 0;
};

struct PermanovaResult {
  double pseudo_f = 0.0;
  double ss_total = 0.0;
  double ss_between = 0.0;
  double ss_within = 0.0;
  int df_between = 0;
  int df_within = 0;
  PermutationSummary test;
};

struct SilhouetteResult {
  double mean = 0.0;
  Eigen::VectorXd per_sample;
  PermutationSummary test;
};

/// Pseudo-F of a fixed grouping, from the Gower-centered matrix of -d^2/2.
[[nodiscard]] PermanovaResult permanova_statistic(const DistanceMatrix& d, const Grouping& g);

[[nodiscard]] PermanovaResult permanova(const DistanceMatrix& d, std::span<const std::string> labels,
                                        const PermutationConfig& config = {});

/// Per-sample silhouettes; singleton clusters and max(a, b) = 0 give 0.
[[nodiscard]] Eigen::VectorXd silhouette_values(const DistanceMatrix& d, const Grouping& g);

[[nodiscard]] SilhouetteResult silhouette(const DistanceMatrix& d,
                                          std::span<const std::string> labels,
                                          const PermutationConfig& config = {});

/// Mean within-group and between-group distance over unordered pairs.
struct DistanceContrast {
  double intra_mean = 0.0;
  double inter_mean = 0.0;
  std::size_t intra_pairs = 0;
  std::size_t inter_pairs = 0;
};

[[nodiscard]] DistanceContrast distance_contrast(const DistanceMatrix& d,
                                                 std::span<const std::string> labels);

/// Network means; networks with no ROI are absent (nullopt), never zero.
using NetworkMeans = std::array<std::optional<double>, kNetworkCount>;

[[nodiscard]] NetworkMeans aggregate_networks(const Eigen::VectorXd& values,
                                              std::span<const Network> assignment);

struct AnovaObservation {
  double value = 0.0;
  std::string factor_a;  ///< e.g. modality
  std::string factor_b;  ///< e.g. network
};

enum class SumOfSquares { TypeI, TypeII };

struct AnovaRow {
  std::string term;
  double sum_of_squares = 0.0;
  double df = 0.0;
  double f = 0.0;        ///< NaN on the residual row
  double p_value = 0.0;  ///< NaN on the residual row
};

struct AnovaTable {
  /// factor_a, factor_b, interaction, residual, in that order.
  std::vector<AnovaRow> rows;
  SumOfSquares type = SumOfSquares::TypeII;
  std::size_t observations = 0;
};

/// Two-way ANOVA with interaction on an effect-coded linear model. Every
/// cell of the design must be occupied.
[[nodiscard]] AnovaTable two_way_anova(std::span<const AnovaObservation> observations,
                                       SumOfSquares type = SumOfSquares::TypeII,
                                       std::string_view factor_a_name = "modality",
                                       std::string_view factor_b_name = "network");

/// Upper-tail probability of the F distribution.
[[nodiscard]] double f_distribution_sf(double f, double df1, double df2);

}  // namespace nfas
