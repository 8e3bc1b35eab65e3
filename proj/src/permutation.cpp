#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nfas/error.hpp"
#include "nfas/geometry_stats.hpp"
#include "nfas/parallel.hpp"
#include "nfas/random.hpp"

namespace nfas {
namespace {

// Ties count as exceedances. Relative slack absorbs summation-order noise
// between labelings that induce the same partition.
bool at_least(double value, double observed) {
  if (std::isinf(observed)) return value >= observed;
  return value >= observed - 1e-10 * std::max(1.0, std::abs(observed));
}

// Number of distinct labelings n! / prod(n_g!), or +inf once it exceeds cap.
double distinct_labelings(const std::vector<int>& sizes, double cap) {
  double count = 1.0;
  int placed = 0;
  for (int s : sizes) {
    for (int i = 1; i <= s; ++i) {
      ++placed;
      count = count * placed / i;
      if (count > cap) return std::numeric_limits<double>::infinity();
    }
  }
  return std::round(count);
}

template <typename Statistic>
PermutationSummary permutation_test(const Grouping& g, double observed, const PermutationConfig& cfg,
                                    std::string_view tag, Statistic&& statistic) {
  if (cfg.n_permutations < 1) throw ValidationError("permutation count must be at least 1");
  PermutationSummary s;
  s.n_permutations = cfg.n_permutations;
  s.seed = cfg.seed;

  const double labelings = distinct_labelings(g.sizes(), static_cast<double>(cfg.n_permutations));
  if (cfg.exact_when_small && std::isfinite(labelings)) {
    std::vector<int> ids = g.ids;
    std::sort(ids.begin(), ids.end());
    std::uint64_t hits = 0;
    std::uint64_t total = 0;
    do {
      ++total;
      if (at_least(statistic(ids), observed)) ++hits;
    } while (std::next_permutation(ids.begin(), ids.end()));
    s.exact = true;
    s.evaluated = total;
    s.p_value = static_cast<double>(hits) / static_cast<double>(total);
    return s;
  }

  const auto n = static_cast<std::size_t>(cfg.n_permutations);
  std::vector<double> stats(n);
  parallel_for(n, cfg.jobs, [&](std::size_t rep) {
    std::vector<int> ids = g.ids;
    auto rng = make_stream(cfg.seed, tag, rep);
    for (std::size_t i = ids.size() - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(ids[i], ids[pick(rng)]);
    }
    stats[rep] = statistic(ids);
  });
  const auto hits = std::count_if(stats.begin(), stats.end(),
                                  [&](double v) { return at_least(v, observed); });
  s.evaluated = n;
  s.p_value = static_cast<double>(1 + hits) / static_cast<double>(1 + n);
  return s;
}

void check_grouping(const DistanceMatrix& d, const Grouping& g) {
  if (static_cast<Eigen::Index>(g.ids.size()) != d.size()) {
    throw ValidationError("label count does not match the distance matrix");
  }
  if (g.group_count() < 2) {
    throw ValidationError("a single group spans the whole sample; at least 2 groups are required");
  }
}

// Gower-centered matrix G = H (-d^2 / 2) H.
Eigen::MatrixXd gower(const DistanceMatrix& d) {
  const Eigen::MatrixXd a = -0.5 * d.values.array().square().matrix();
  const Eigen::VectorXd row_mean = a.rowwise().mean();
  const double grand = a.mean();
  Eigen::MatrixXd g = a;
  g.colwise() -= row_mean;
  g.rowwise() -= row_mean.transpose();
  g.array() += grand;
  return g;
}

PermanovaResult pseudo_f(const Eigen::MatrixXd& g, double ss_total, const std::vector<int>& ids,
                         int groups) {
  const auto n = static_cast<int>(ids.size());
  std::vector<double> block(static_cast<std::size_t>(groups), 0.0);
  std::vector<int> sizes(static_cast<std::size_t>(groups), 0);
  for (int i = 0; i < n; ++i) {
    ++sizes[static_cast<std::size_t>(ids[static_cast<std::size_t>(i)])];
    for (int j = 0; j < n; ++j) {
      if (ids[static_cast<std::size_t>(i)] == ids[static_cast<std::size_t>(j)]) {
        block[static_cast<std::size_t>(ids[static_cast<std::size_t>(i)])] += g(i, j);
      }
    }
  }
  PermanovaResult r;
  r.ss_total = ss_total;
  for (int k = 0; k < groups; ++k) {
    r.ss_between += block[static_cast<std::size_t>(k)] / sizes[static_cast<std::size_t>(k)];
  }
  r.ss_within = ss_total - r.ss_between;
  // Within-group scatter at rounding level of the total is treated as zero.
  if (r.ss_within <= 1e-12 * ss_total) r.ss_within = 0.0;
  r.df_between = groups - 1;
  r.df_within = n - groups;
  if (r.ss_within == 0.0) {
    r.pseudo_f = r.ss_between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  } else {
    r.pseudo_f = (r.ss_between / r.df_between) / (r.ss_within / r.df_within);
  }
  return r;
}

}  // namespace

std::vector<int> Grouping::sizes() const {
  std::vector<int> s(names.size(), 0);
  for (int id : ids) ++s[static_cast<std::size_t>(id)];
  return s;
}

Grouping make_grouping(std::span<const std::string> labels) {
  Grouping g;
  g.ids.reserve(labels.size());
  for (const auto& l : labels) {
    auto it = std::find(g.names.begin(), g.names.end(), l);
    if (it == g.names.end()) {
      g.names.push_back(l);
      g.ids.push_back(g.group_count() - 1);
    } else {
      g.ids.push_back(static_cast<int>(it - g.names.begin()));
    }
  }
  return g;
}

PermanovaResult permanova_statistic(const DistanceMatrix& d, const Grouping& g) {
  check_grouping(d, g);
  if (static_cast<int>(g.ids.size()) - g.group_count() < 1) {
    throw ValidationError("PERMANOVA needs at least one group with 2 or more members");
  }
  const Eigen::MatrixXd gm = gower(d);
  return pseudo_f(gm, gm.trace(), g.ids, g.group_count());
}

PermanovaResult permanova(const DistanceMatrix& d, std::span<const std::string> labels,
                          const PermutationConfig& config) {
  const Grouping g = make_grouping(labels);
  PermanovaResult result = permanova_statistic(d, g);
  const Eigen::MatrixXd gm = gower(d);
  const double ss_total = gm.trace();
  result.test = permutation_test(g, result.pseudo_f, config, "permanova", [&](const std::vector<int>& ids) {
    return pseudo_f(gm, ss_total, ids, g.group_count()).pseudo_f;
  });
  return result;
}

namespace {

Eigen::VectorXd silhouette_of(const Eigen::MatrixXd& d, const std::vector<int>& ids, int groups) {
  const auto n = static_cast<Eigen::Index>(ids.size());
  std::vector<int> sizes(static_cast<std::size_t>(groups), 0);
  for (int id : ids) ++sizes[static_cast<std::size_t>(id)];
  Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
  std::vector<double> sums(static_cast<std::size_t>(groups));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int own = ids[static_cast<std::size_t>(i)];
    if (sizes[static_cast<std::size_t>(own)] < 2) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) sums[static_cast<std::size_t>(ids[static_cast<std::size_t>(j)])] += d(i, j);
    }
    const double a = sums[static_cast<std::size_t>(own)] / (sizes[static_cast<std::size_t>(own)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int k = 0; k < groups; ++k) {
      if (k != own && sizes[static_cast<std::size_t>(k)] > 0) {
        b = std::min(b, sums[static_cast<std::size_t>(k)] / sizes[static_cast<std::size_t>(k)]);
      }
    }
    const double denom = std::max(a, b);
    s(i) = denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return s;
}

}  // namespace

Eigen::VectorXd silhouette_values(const DistanceMatrix& d, const Grouping& g) {
  check_grouping(d, g);
  return silhouette_of(d.values, g.ids, g.group_count());
}

SilhouetteResult silhouette(const DistanceMatrix& d, std::span<const std::string> labels,
                            const PermutationConfig& config) {
  const Grouping g = make_grouping(labels);
  SilhouetteResult r;
  r.per_sample = silhouette_values(d, g);
  r.mean = r.per_sample.mean();
  r.test = permutation_test(g, r.mean, config, "silhouette", [&](const std::vector<int>& ids) {
    return silhouette_of(d.values, ids, g.group_count()).mean();
  });
  return r;
}

}  // namespace nfas
