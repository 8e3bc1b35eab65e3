#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "../oracles/reference.hpp"
#include "helpers.hpp"
#include "nfas/error.hpp"
#include "nfas/geometry_stats.hpp"

using namespace nfas;

namespace {

DistanceMatrix from_values(Eigen::MatrixXd v) {
  DistanceMatrix d;
  d.values = std::move(v);
  return d;
}

// Two clusters: within-cluster distances ~0.01, between ~10.
DistanceMatrix separated(int per_group, std::uint64_t seed) {
  Eigen::MatrixXd pts = 0.005 * testing::gaussian(2 * per_group, 3, seed);
  for (int i = per_group; i < 2 * per_group; ++i) pts(i, 0) += 10.0;
  return euclidean_distance_matrix(pts);
}

std::vector<std::string> two_groups(int per_group, std::string a = "vision", std::string b = "audio") {
  std::vector<std::string> l(static_cast<std::size_t>(per_group), a);
  l.insert(l.end(), static_cast<std::size_t>(per_group), b);
  return l;
}

}  // namespace

TEST_CASE("hand-computed four-point silhouette") {
  Eigen::MatrixXd v(4, 4);
  v << 0.0, 0.2, 1.0, 1.0,  //
      0.2, 0.0, 1.0, 1.0,   //
      1.0, 1.0, 0.0, 0.2,   //
      1.0, 1.0, 0.2, 0.0;
  const std::vector<std::string> labels{"1", "1", "2", "2"};
  const SilhouetteResult s = silhouette(from_values(v), labels);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(s.per_sample(i) == 0.8);
  CHECK(s.mean == 0.8);
  // 3 distinct labelings, two of which reproduce the partition
  CHECK(s.test.exact);
  CHECK(s.test.evaluated == 6);
  CHECK(s.test.p_value == doctest::Approx(2.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("tight far clusters silhouette") {
  const SilhouetteResult s = silhouette(separated(5, 1), two_groups(5));
  CHECK(s.mean >= 0.99);
  CHECK(std::abs(s.mean - s.per_sample.mean()) <= 1e-12);
}

TEST_CASE("identical points have zero silhouette") {
  const SilhouetteResult s = silhouette(from_values(Eigen::MatrixXd::Zero(6, 6)), two_groups(3));
  CHECK(s.mean == 0.0);
  CHECK(s.per_sample.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("singletons get zero silhouette") {
  Eigen::MatrixXd pts(3, 1);
  pts << 0.0, 0.1, 5.0;
  const Eigen::VectorXd s =
      silhouette_values(euclidean_distance_matrix(pts), make_grouping(std::vector<std::string>{"a", "a", "b"}));
  CHECK(s(2) == 0.0);
  CHECK(s(0) > 0.9);
}

TEST_CASE("pseudo-F matches the pairwise formula") {
  const Eigen::MatrixXd pts = testing::gaussian(12, 4, 2);
  const DistanceMatrix d = euclidean_distance_matrix(pts);
  const std::vector<std::string> labels{"a", "b", "c", "a", "b", "c", "a", "b", "c", "a", "a", "b"};
  const Grouping g = make_grouping(labels);
  const PermanovaResult r = permanova_statistic(d, g);
  CHECK(r.pseudo_f == doctest::Approx(oracle::anderson_pseudo_f(d.values, g.ids)).epsilon(1e-10));
  CHECK(r.df_between == 2);
  CHECK(r.df_within == 9);
  CHECK(r.ss_total == doctest::Approx(r.ss_between + r.ss_within).epsilon(1e-12));
}

TEST_CASE("n=4 PERMANOVA equals exhaustive enumeration") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DistanceMatrix d = euclidean_distance_matrix(testing::gaussian(4, 3, 100 + seed));
    const std::vector<std::string> labels{"x", "y", "x", "y"};
    const PermanovaResult r = permanova(d, labels, {.n_permutations = 999, .seed = seed});
    CHECK(r.test.exact);
    CHECK(r.test.p_value == oracle::exhaustive_permanova_p(d.values, make_grouping(labels).ids));
  }
}

TEST_CASE("ten separated models: exact p is the attainable floor 2/252") {
  const DistanceMatrix d = separated(5, 3);
  const PermanovaResult exact = permanova(d, two_groups(5), {.n_permutations = 999, .seed = 1});
  CHECK(exact.test.exact);
  CHECK(exact.test.evaluated == 252);
  CHECK(exact.test.p_value == doctest::Approx(2.0 / 252.0).epsilon(1e-15));

  const PermanovaResult sampled =
      permanova(d, two_groups(5), {.n_permutations = 999, .seed = 1, .exact_when_small = false});
  CHECK_FALSE(sampled.test.exact);
  CHECK(sampled.test.p_value >= 1.0 / 1000.0);
  CHECK(sampled.test.p_value < 0.05);
}

TEST_CASE("larger separated clusters reach the 1/(n+1) floor") {
  const PermanovaResult r = permanova(separated(10, 4), two_groups(10), {.n_permutations = 999, .seed = 2});
  CHECK_FALSE(r.test.exact);
  CHECK(r.test.p_value == 1.0 / 1000.0);
}

TEST_CASE("null calibration") {
  int calibrated = 0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    const DistanceMatrix d = euclidean_distance_matrix(testing::gaussian(20, 5, 500 + rep));
    std::vector<std::string> labels = two_groups(10);
    std::mt19937_64 rng(900 + rep);
    std::shuffle(labels.begin(), labels.end(), rng);
    if (permanova(d, labels, {.n_permutations = 199, .seed = rep}).test.p_value > 0.05) ++calibrated;
  }
  CHECK(calibrated >= 90);
}

TEST_CASE("relabeling and rescaling leave p unchanged") {
  const DistanceMatrix d = cosine_distance_matrix(testing::gaussian(16, 6, 7).cwiseAbs());
  const std::vector<std::string> a = {"v", "a", "l", "v", "a", "l", "v", "a", "l", "v", "a", "l", "v", "a", "l", "v"};
  std::vector<std::string> b;
  for (const auto& s : a) b.push_back(s == "v" ? "zzz" : s == "a" ? "aaa" : "mmm");
  const PermutationConfig cfg{.n_permutations = 499, .seed = 11};
  const PermanovaResult pa = permanova(d, a, cfg);
  const PermanovaResult pb = permanova(d, b, cfg);
  CHECK(pa.pseudo_f == pb.pseudo_f);
  CHECK(pa.test.p_value == pb.test.p_value);
  const SilhouetteResult sa = silhouette(d, a, cfg);
  const SilhouetteResult sb = silhouette(d, b, cfg);
  CHECK(sa.mean == sb.mean);
  CHECK(sa.test.p_value == sb.test.p_value);

  for (double alpha : {0.001, 3.0, 1000.0}) {
    const DistanceMatrix scaled = from_values(alpha * d.values);
    const PermanovaResult ps = permanova(scaled, a, cfg);
    CHECK(ps.pseudo_f == doctest::Approx(pa.pseudo_f).epsilon(1e-10));
    CHECK(ps.test.p_value == pa.test.p_value);
    const SilhouetteResult ss = silhouette(scaled, a, cfg);
    CHECK(ss.mean == doctest::Approx(sa.mean).epsilon(1e-10));
    CHECK(ss.test.p_value == sa.test.p_value);
  }
}

TEST_CASE("parallel permutations equal sequential") {
  const DistanceMatrix d = euclidean_distance_matrix(testing::gaussian(24, 4, 8));
  std::vector<std::string> labels;
  for (int i = 0; i < 24; ++i) labels.push_back(i % 3 == 0 ? "a" : "b");
  for (int jobs : {2, 3, 8}) {
    const PermanovaResult seq = permanova(d, labels, {.n_permutations = 999, .seed = 5, .jobs = 1});
    const PermanovaResult par = permanova(d, labels, {.n_permutations = 999, .seed = 5, .jobs = jobs});
    CHECK(seq.test.p_value == par.test.p_value);
    const SilhouetteResult s1 = silhouette(d, labels, {.n_permutations = 999, .seed = 5, .jobs = 1});
    const SilhouetteResult s2 = silhouette(d, labels, {.n_permutations = 999, .seed = 5, .jobs = jobs});
    CHECK(s1.test.p_value == s2.test.p_value);
  }
  const PermanovaResult other = permanova(d, labels, {.n_permutations = 999, .seed = 6});
  CHECK(other.test.seed == 6);
}

TEST_CASE("p-value bounds") {
  const DistanceMatrix d = euclidean_distance_matrix(testing::gaussian(30, 4, 9));
  std::vector<std::string> labels;
  for (int i = 0; i < 30; ++i) labels.push_back(i < 15 ? "a" : "b");
  const PermanovaResult r = permanova(d, labels, {.n_permutations = 99, .seed = 1});
  CHECK(r.test.p_value >= 1.0 / 100.0);
  CHECK(r.test.p_value <= 1.0);
  CHECK(r.test.evaluated == 99);
}

TEST_CASE("invalid groupings") {
  const DistanceMatrix d = euclidean_distance_matrix(testing::gaussian(4, 2, 10));
  const std::vector<std::string> one{"a", "a", "a", "a"};
  CHECK_THROWS_AS((void)permanova(d, one), ValidationError);
  CHECK_THROWS_AS((void)silhouette(d, one), ValidationError);
  const std::vector<std::string> short_labels{"a", "b"};
  CHECK_THROWS_AS((void)permanova(d, short_labels), ValidationError);
  const std::vector<std::string> ok{"a", "b", "a", "b"};
  CHECK_THROWS_AS((void)permanova(d, ok, {.n_permutations = 0}), ValidationError);
}
