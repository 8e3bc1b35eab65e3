#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "nfas/error.hpp"
#include "nfas/geometry_stats.hpp"

namespace nfas {

DistanceMatrix cosine_distance_matrix(const Eigen::MatrixXd& vectors,
                                      std::span<const std::string> names) {
  const Eigen::Index n = vectors.rows();
  if (n < 2) throw ValidationError("distance matrix needs at least 2 vectors");
  if (!vectors.allFinite()) throw ValidationError("vectors must be finite");
  const Eigen::VectorXd norms = vectors.rowwise().norm();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (norms(i) == 0.0) {
      const std::string who = static_cast<std::size_t>(i) < names.size()
                                  ? "'" + names[static_cast<std::size_t>(i)] + "'"
                                  : "#" + std::to_string(i);
      throw ValidationError("vector " + who + " has zero norm; cosine distance is undefined");
    }
  }
  DistanceMatrix d;
  d.metric = DistanceMetric::Cosine;
  d.values = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double dist = 0.0;
      if (vectors.row(i) != vectors.row(j)) {
        const double cos = vectors.row(i).dot(vectors.row(j)) / (norms(i) * norms(j));
        dist = std::clamp(1.0 - cos, 0.0, 2.0);
      }
      d.values(i, j) = d.values(j, i) = dist;
    }
  }
  return d;
}

DistanceMatrix euclidean_distance_matrix(const Eigen::MatrixXd& vectors) {
  const Eigen::Index n = vectors.rows();
  if (n < 2) throw ValidationError("distance matrix needs at least 2 vectors");
  if (!vectors.allFinite()) throw ValidationError("vectors must be finite");
  DistanceMatrix d;
  d.metric = DistanceMetric::Euclidean;
  d.values = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d.values(i, j) = d.values(j, i) = (vectors.row(i) - vectors.row(j)).norm();
    }
  }
  return d;
}

DistanceMatrix distance_matrix(const Eigen::MatrixXd& vectors, DistanceMetric metric,
                               std::span<const std::string> names) {
  return metric == DistanceMetric::Cosine ? cosine_distance_matrix(vectors, names)
                                          : euclidean_distance_matrix(vectors);
}

PcaEmbedding pca_embed(const Eigen::MatrixXd& scores, Eigen::Index k) {
  const Eigen::Index M = scores.rows();
  const Eigen::Index R = scores.cols();
  if (M < 2) throw ValidationError("PCA needs at least 2 models");
  if (k < 1 || k > std::min(M - 1, R)) {
    throw ValidationError("PCA component count " + std::to_string(k) + " outside [1, " +
                          std::to_string(std::min(M - 1, R)) + "]");
  }
  if (!scores.allFinite()) throw ValidationError("PCA input must be finite");

  PcaEmbedding out;
  out.mean = scores.colwise().mean().transpose();
  const Eigen::MatrixXd centered = scores.rowwise() - out.mean.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd var = svd.singularValues().array().square();
  const double total = var.sum();

  out.components = svd.matrixV().leftCols(k).transpose();
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::Index pivot = 0;
    const double peak = out.components.row(c).cwiseAbs().maxCoeff();
    for (Eigen::Index j = 0; j < R; ++j) {
      if (std::abs(out.components(c, j)) >= peak * (1.0 - 1e-8)) {
        pivot = j;
        break;
      }
    }
    if (out.components(c, pivot) < 0.0) out.components.row(c) *= -1.0;
  }
  out.explained_variance_ratio =
      total > 0.0 ? Eigen::VectorXd(var.head(k) / total) : Eigen::VectorXd::Zero(k);
  out.coordinates = centered * out.components.transpose();
  return out;
}

DistanceContrast distance_contrast(const DistanceMatrix& d, std::span<const std::string> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != d.size()) {
    throw ValidationError("label count does not match the distance matrix");
  }
  DistanceContrast c;
  double intra = 0.0;
  double inter = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    for (Eigen::Index j = i + 1; j < d.size(); ++j) {
      if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) {
        intra += d.values(i, j);
        ++c.intra_pairs;
      } else {
        inter += d.values(i, j);
        ++c.inter_pairs;
      }
    }
  }
  c.intra_mean = c.intra_pairs ? intra / static_cast<double>(c.intra_pairs) : 0.0;
  c.inter_mean = c.inter_pairs ? inter / static_cast<double>(c.inter_pairs) : 0.0;
  return c;
}

NetworkMeans aggregate_networks(const Eigen::VectorXd& values, std::span<const Network> assignment) {
  if (static_cast<Eigen::Index>(assignment.size()) != values.size()) {
    throw ValidationError("network assignment covers " + std::to_string(assignment.size()) +
                          " ROIs but " + std::to_string(values.size()) + " values were given");
  }
  std::array<double, kNetworkCount> sums{};
  std::array<int, kNetworkCount> counts{};
  for (std::size_t r = 0; r < assignment.size(); ++r) {
    const auto n = static_cast<std::size_t>(assignment[r]);
    sums[n] += values(static_cast<Eigen::Index>(r));
    ++counts[n];
  }
  NetworkMeans out;
  for (std::size_t n = 0; n < kNetworkCount; ++n) {
    if (counts[n] > 0) out[n] = sums[n] / counts[n];
  }
  return out;
}

}  // namespace nfas
