#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "sharp/network.hpp"
#include "sharp/pseudolabels.hpp"
#include "test_support.hpp"

using namespace sharp;
namespace oracle = sharp::testing::oracle;

namespace {

Tensor two_blobs(std::size_t per_blob, std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed, "two-blobs");
  Tensor x(Shape{2 * per_blob, n});
  for (std::size_t i = 0; i < 2 * per_blob; ++i) {
    const double centre = i < per_blob ? 0.0 : 10.0;
    for (std::size_t d = 0; d < n; ++d) x.at(i, d) = centre + 0.5 * standard_normal(rng);
  }
  return x;
}

Tensor permute_rows(const Tensor& x, const std::vector<std::size_t>& perm) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    for (std::size_t d = 0; d < x.cols(); ++d) out.at(i, d) = x.at(perm[i], d);
  }
  return out;
}

// Labels of the permuted run mapped back to the original row order.
std::vector<int> unpermute(const std::vector<int>& labels, const std::vector<std::size_t>& perm) {
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out[perm[i]] = labels[i];
  return out;
}

Tensor random_points(std::size_t m, std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed, "points");
  return sharp::testing::random_tensor(Shape{m, n}, rng, 0.0, 1.0);
}

}  // namespace

TEST(LabelSource, Parse) {
  EXPECT_EQ(LabelSource::parse("gt").kind, LabelSource::Kind::GroundTruth);
  const auto km = LabelSource::parse("kmeans:7");
  EXPECT_EQ(km.kind, LabelSource::Kind::KMeans);
  EXPECT_EQ(km.k, 7u);
  EXPECT_EQ(LabelSource::parse("kmeans").k, 0u);
  const auto ag = LabelSource::parse("agglo:3");
  EXPECT_EQ(ag.kind, LabelSource::Kind::Agglomerative);
  EXPECT_EQ(ag.describe(), "agglo:3");
  for (const char* bad : {"kmeans:1", "kmeans:0", "agglo:x", "dbscan", "gt:3", "kmeans:-2"}) {
    EXPECT_THROW(LabelSource::parse(bad), std::invalid_argument) << bad;
  }
}

TEST(KMeans, SeparatesTwoBlobsLikeExhaustiveSearch) {
  const Tensor x = two_blobs(3, 4, 1);
  const auto best = oracle::best_two_partition(x);
  EXPECT_EQ(kmeans(x, 2, 0).labels, best);
  EXPECT_EQ(best, (std::vector<int>{1, 1, 1, 2, 2, 2}));
}

TEST(KMeans, SingleClusterIsTheMean) {
  const Tensor x = random_points(20, 3, 2);
  const auto r = kmeans(x, 1, 0);
  EXPECT_TRUE(std::all_of(r.labels.begin(), r.labels.end(), [](int l) { return l == 1; }));
  for (std::size_t d = 0; d < 3; ++d) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 20; ++i) mean += x.at(i, d) / 20.0;
    EXPECT_NEAR(r.centroids.at(0, d), mean, 1e-14);
  }
}

TEST(KMeans, DuplicatedDataGivesSamePartition) {
  const Tensor x = two_blobs(15, 3, 3);
  Tensor twice(Shape{60, 3});
  for (std::size_t i = 0; i < 60; ++i) {
    for (std::size_t d = 0; d < 3; ++d) twice.at(i, d) = x.at(i % 30, d);
  }
  const auto once = kmeans(x, 2, 0).labels;
  const auto doubled = kmeans(twice, 2, 0).labels;
  EXPECT_EQ(std::vector<int>(doubled.begin(), doubled.begin() + 30), once);
  EXPECT_EQ(std::vector<int>(doubled.begin() + 30, doubled.end()), once);
}

TEST(KMeans, RejectsTooFewPoints) {
  EXPECT_THROW(kmeans(random_points(3, 2, 4), 4, 0), std::invalid_argument);
  EXPECT_THROW(kmeans(random_points(3, 2, 4), 0, 0), std::invalid_argument);
}

TEST(KMeans, ObjectiveNeverIncreases) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Tensor x = random_points(200, 4, 10 + seed);
    const auto r = kmeans(x, 6, seed);
    ASSERT_FALSE(r.wcss_history.empty());
    for (std::size_t i = 1; i < r.wcss_history.size(); ++i) {
      EXPECT_LE(r.wcss_history[i], r.wcss_history[i - 1] * (1 + 1e-12)) << "seed " << seed << " iteration " << i;
    }
    EXPECT_NEAR(r.wcss_history.back(), oracle::wcss(x, r.labels), 1e-9);
  }
}

TEST(KMeans, ResultIsALloydFixpoint) {
  const Tensor x = random_points(150, 3, 30);
  const auto r = kmeans(x, 5, 7);
  std::vector<int> seen(6, 0);
  for (std::size_t i = 0; i < 150; ++i) {
    seen[static_cast<std::size_t>(r.labels[i])] = 1;
    double best = 1e300;
    int arg = 0;
    for (std::size_t c = 0; c < 5; ++c) {
      double d = 0.0;
      for (std::size_t j = 0; j < 3; ++j) d += std::pow(x.at(i, j) - r.centroids.at(c, j), 2);
      if (d < best) {
        best = d;
        arg = static_cast<int>(c) + 1;
      }
    }
    EXPECT_EQ(r.labels[i], arg);
  }
  EXPECT_EQ(std::accumulate(seen.begin(), seen.end(), 0), 5);  // no empty cluster
}

TEST(KMeans, EveryClusterNonEmptyWithDuplicates) {
  // Only three distinct points but K = 3 and heavy duplication.
  Tensor x(Shape{30, 1});
  for (std::size_t i = 0; i < 30; ++i) x.at(i, 0) = i < 25 ? 0.0 : (i < 28 ? 1.0 : 5.0);
  const auto r = kmeans(x, 3, 0);
  for (int c = 1; c <= 3; ++c) EXPECT_NE(std::find(r.labels.begin(), r.labels.end(), c), r.labels.end());
}

TEST(KMeans, LabelsAreCanonicalAndSeeded) {
  const Tensor x = random_points(100, 2, 40);
  const auto a = kmeans(x, 4, 3), b = kmeans(x, 4, 3);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_EQ(a.labels, canonical_labels(a.labels));
}

TEST(KMeans, PermutationEquivariantOnSeparatedData) {
  const auto blobs = sharp::testing::make_blobs(4, 25, 5, 10.0, 0.3, 50);
  const auto base = kmeans(blobs.x, 4, 0).labels;
  Rng rng = make_rng(51, "perm");
  const auto perm = shuffled_indices(100, rng);
  const auto moved = kmeans(permute_rows(blobs.x, perm), 4, 0).labels;
  EXPECT_EQ(canonical_labels(unpermute(moved, perm)), base);
  EXPECT_EQ(base, blobs.labels);
}

TEST(Agglomerative, MergesNearestPairOnALine) {
  const Tensor x = Tensor::matrix({{0.0}, {1.0}, {10.0}});
  EXPECT_EQ(agglomerative(x, 2), (std::vector<int>{1, 1, 2}));
  EXPECT_EQ(agglomerative(x, 3), (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(agglomerative(x, 1), (std::vector<int>{1, 1, 1}));
}

TEST(Agglomerative, RejectsTooFewPoints) {
  EXPECT_THROW(agglomerative(random_points(3, 2, 60), 4), std::invalid_argument);
}

TEST(Agglomerative, TwoBlobsMatchExhaustiveWardOptimum) {
  const Tensor x = two_blobs(6, 3, 61);
  EXPECT_EQ(agglomerative(x, 2), oracle::best_two_partition(x));
}

TEST(Agglomerative, MatchesNaiveGreedyWard) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng = make_rng(seed, "sizes");
    const std::size_t m = 5 + rng() % 36, n = 1 + rng() % 5, k = 1 + rng() % 6;
    const Tensor x = random_points(m, n, 100 + seed);
    EXPECT_EQ(agglomerative(x, k), oracle::greedy_ward(x, k)) << "seed " << seed;
  }
}

TEST(Agglomerative, PermutationEquivariant) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Tensor x = random_points(40, 3, 200 + seed);
    Rng rng = make_rng(seed, "perm");
    const auto perm = shuffled_indices(40, rng);
    EXPECT_EQ(canonical_labels(unpermute(agglomerative(permute_rows(x, perm), 4), perm)), agglomerative(x, 4));
  }
}

TEST(Canonical, FirstAppearanceOrder) {
  EXPECT_EQ(canonical_labels(std::vector<int>{5, 5, 2, 9, 2}), (std::vector<int>{1, 1, 2, 3, 2}));
  EXPECT_TRUE(canonical_labels(std::vector<int>{}).empty());
}

TEST(WithinClusterSs, MatchesOracle) {
  const Tensor x = random_points(30, 4, 300);
  std::vector<int> labels(30);
  for (std::size_t i = 0; i < 30; ++i) labels[i] = 1 + static_cast<int>(i % 3);
  EXPECT_NEAR(within_cluster_ss(x, labels), oracle::wcss(x, labels), 1e-12);
}
