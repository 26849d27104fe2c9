#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sharp/metrics.hpp"
#include "sharp/rng.hpp"
#include "test_support.hpp"

using namespace sharp;
namespace oracle = sharp::testing::oracle;

namespace {

Tensor random_points(std::size_t m, std::size_t n, std::uint64_t seed, const char* stream = "points") {
  Rng rng = make_rng(seed, stream);
  return sharp::testing::random_tensor(Shape{m, n}, rng, 0.0, 1.0);
}

std::vector<int> random_labels(std::size_t m, int k, std::uint64_t seed) {
  Rng rng = make_rng(seed, "labels");
  std::vector<int> y(m);
  // Every class present: the first k rows take 1..k.
  for (std::size_t i = 0; i < m; ++i) {
    y[i] = i < static_cast<std::size_t>(k) ? static_cast<int>(i) + 1
                                          : 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(k));
  }
  return y;
}

Tensor rigid(const Tensor& p, double angle, double tx, double ty, double scale = 1.0) {
  Tensor out(p.shape());
  const double c = std::cos(angle), s = std::sin(angle);
  for (std::size_t i = 0; i < p.rows(); ++i) {
    out.at(i, 0) = scale * (c * p.at(i, 0) - s * p.at(i, 1)) + tx;
    out.at(i, 1) = scale * (s * p.at(i, 0) + c * p.at(i, 1)) + ty;
  }
  return out;
}

}  // namespace

TEST(NeighborIndex, ExcludesSelfAndBreaksTiesByIndex) {
  // Unit square corners plus the centre: many equal distances.
  const Tensor p = Tensor::matrix({{0, 0}, {1, 0}, {0, 1}, {1, 1}, {0.5, 0.5}});
  const NeighborIndex idx(p, 3);
  EXPECT_EQ(idx.size(), 5u);
  const auto n0 = idx.neighbors(0);
  EXPECT_EQ(std::vector<std::size_t>(n0.begin(), n0.end()), (std::vector<std::size_t>{4, 1, 2}));
  const auto n4 = idx.neighbors(4);
  EXPECT_EQ(std::vector<std::size_t>(n4.begin(), n4.end()), (std::vector<std::size_t>{0, 1, 2}));
  const Tensor r = random_points(60, 3, 1);
  const NeighborIndex big(r, 10);
  for (std::size_t i = 0; i < 60; ++i) {
    const auto nb = big.neighbors(i);
    for (std::size_t j = 0; j < nb.size(); ++j) {
      EXPECT_NE(nb[j], i);
      if (j > 0) {
        const double a = euclidean(r.row(i), r.row(nb[j - 1])), b = euclidean(r.row(i), r.row(nb[j]));
        EXPECT_TRUE(a < b || (a == b && nb[j - 1] < nb[j]));
      }
    }
  }
  EXPECT_THROW(NeighborIndex(r, 60), std::invalid_argument);
}

TEST(Trustworthiness, IdentityIsPerfect) {
  const Tensor x = random_points(40, 2, 2);
  EXPECT_EQ(trustworthiness(x, x, 7), 1.0);
  EXPECT_EQ(continuity(x, x, 7), 1.0);
}

TEST(Trustworthiness, SwappedFarPointsArePenalised) {
  const Tensor x = Tensor::matrix({{0, 0}, {1, 0}, {10, 0}, {11, 0}});
  const Tensor p = Tensor::matrix({{11, 0}, {1, 0}, {10, 0}, {0, 0}});
  const double t = trustworthiness(x, p, 1);
  EXPECT_LT(t, 1.0);
  EXPECT_EQ(t, oracle::trustworthiness(x, p, 1));
}

TEST(Trustworthiness, RejectsBadK) {
  const Tensor x = random_points(10, 3, 3), p = random_points(10, 2, 4);
  EXPECT_THROW(trustworthiness(x, p, 0), std::invalid_argument);
  EXPECT_THROW(trustworthiness(x, p, 7), std::invalid_argument);  // 3k >= 2m - 1
  EXPECT_NO_THROW(trustworthiness(x, p, 6));
  EXPECT_THROW(continuity(x, p, 7), std::invalid_argument);
  EXPECT_THROW(trustworthiness(x, random_points(9, 2, 4), 3), std::invalid_argument);
}

TEST(Continuity, IsTrustworthinessWithRolesSwapped) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Tensor x = random_points(25, 4, 10 + seed), p = random_points(25, 2, 20 + seed);
    EXPECT_EQ(continuity(x, p, 5), trustworthiness(p, x, 5));
  }
}

TEST(Shepard, SimilarityTransformIsPerfect) {
  const Tensor x = random_points(30, 2, 5);
  EXPECT_NEAR(shepard_correlation(x, rigid(x, 0.8, 3, -1, 2.5)), 1.0, 1e-12);
}

TEST(Shepard, ReversedDistanceRanks) {
  const Tensor x = Tensor::matrix({{0}, {1}, {3}});
  const Tensor p = Tensor::matrix({{0}, {3}, {1}});
  EXPECT_NEAR(shepard_correlation(x, p), -1.0, 1e-15);
}

TEST(Shepard, RejectsConstantDistances) {
  const Tensor x = random_points(5, 3, 6);
  const Tensor p(Shape{5, 2}, 0.5);
  EXPECT_THROW(shepard_correlation(x, p), std::invalid_argument);
  EXPECT_THROW(shepard_correlation(random_points(2, 3, 6), random_points(2, 2, 6)), std::invalid_argument);
}

TEST(Stress, Examples) {
  const Tensor x = random_points(20, 2, 7);
  EXPECT_NEAR(normalized_stress(x, rigid(x, 1.3, -4, 2)), 0.0, 1e-24);
  EXPECT_NEAR(normalized_stress(x, rigid(x, 0.0, 0, 0, 2.0)), 1.0, 1e-14);
  EXPECT_THROW(normalized_stress(Tensor(Shape{4, 3}, 1.0), random_points(4, 2, 7)), std::invalid_argument);
}

TEST(NeighborhoodHit, Examples) {
  Tensor p(Shape{20, 2});
  std::vector<int> y(20);
  for (std::size_t i = 0; i < 20; ++i) {
    p.at(i, 0) = (i < 10 ? 0.0 : 100.0) + 0.1 * static_cast<double>(i % 10);
    y[i] = i < 10 ? 1 : 2;
  }
  EXPECT_EQ(neighborhood_hit(p, y, 3), 1.0);
  EXPECT_THROW(neighborhood_hit(p, y, 20), std::invalid_argument);
  EXPECT_THROW(neighborhood_hit(p, std::vector<int>(19, 1), 3), std::invalid_argument);

  const Tensor r = random_points(4000, 2, 8);
  Rng rng = make_rng(8, "coin");
  std::vector<int> coin(4000);
  for (auto& c : coin) c = 1 + static_cast<int>(rng() % 2);
  EXPECT_NEAR(neighborhood_hit(r, coin, 7), 0.5, 0.05);
}

TEST(Dsc, Examples) {
  Tensor p(Shape{20, 2});
  std::vector<int> y(20);
  for (std::size_t i = 0; i < 20; ++i) {
    p.at(i, 1) = (i % 2 ? 0.0 : 50.0) + 0.01 * static_cast<double>(i);
    y[i] = i % 2 ? 2 : 1;
  }
  EXPECT_EQ(distance_consistency(p, y), 1.0);

  const Tensor r = random_points(4000, 2, 9);
  Rng rng = make_rng(9, "coin");
  std::vector<int> coin(4000);
  for (auto& c : coin) c = 1 + static_cast<int>(rng() % 2);
  EXPECT_NEAR(distance_consistency(r, coin), 0.5, 0.05);

  EXPECT_THROW(distance_consistency(p, std::vector<int>(20, 2)), std::invalid_argument);  // class 1 empty
  EXPECT_THROW(distance_consistency(p, std::vector<int>(20, 0)), std::invalid_argument);
}

TEST(Oracles, SmallInstancesExact) {
  const Tensor x = random_points(6, 3, 11), p = random_points(6, 2, 12);
  const std::vector<int> y{1, 2, 1, 2, 2, 1};
  EXPECT_EQ(trustworthiness(x, p, 1), oracle::trustworthiness(x, p, 1));
  EXPECT_EQ(continuity(x, p, 1), oracle::continuity(x, p, 1));
  EXPECT_EQ(neighborhood_hit(p, y, 2), oracle::neighborhood_hit(p, y, 2));
  EXPECT_EQ(distance_consistency(p, y), oracle::dsc(p, y));
  const Tensor x8 = random_points(8, 3, 13), p8 = random_points(8, 2, 14);
  EXPECT_NEAR(shepard_correlation(x8, p8), oracle::shepard(x8, p8), 1e-12);
  EXPECT_NEAR(normalized_stress(x8, p8), oracle::stress(x8, p8), 1e-12);
}

TEST(Oracles, RandomInstances) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng = make_rng(seed, "sizes");
    const std::size_t m = 5 + rng() % 26, n = 1 + rng() % 5;
    const std::size_t kmax = (2 * m - 2) / 3;  // largest k with 3k < 2m - 1
    const std::size_t k = 1 + rng() % std::min<std::size_t>(kmax, 8);
    const int classes = 1 + static_cast<int>(rng() % 4);
    const Tensor x = random_points(m, n, seed, "x");
    const Tensor p = random_points(m, 2, seed, "p");
    const auto y = random_labels(m, classes, seed);
    SCOPED_TRACE("seed " + std::to_string(seed));
    EXPECT_EQ(trustworthiness(x, p, k), oracle::trustworthiness(x, p, k));
    EXPECT_EQ(continuity(x, p, k), oracle::continuity(x, p, k));
    EXPECT_EQ(neighborhood_hit(p, y, k), oracle::neighborhood_hit(p, y, k));
    EXPECT_EQ(distance_consistency(p, y), oracle::dsc(p, y));
    EXPECT_NEAR(shepard_correlation(x, p), oracle::shepard(x, p), 1e-12);
    EXPECT_NEAR(normalized_stress(x, p), oracle::stress(x, p), 1e-12);
  }
}

TEST(Oracles, TiedDistances) {
  // Integer grids make many distances equal; ties must resolve the same way.
  Tensor x(Shape{12, 2}), p(Shape{12, 2});
  for (std::size_t i = 0; i < 12; ++i) {
    x.at(i, 0) = static_cast<double>(i % 4);
    x.at(i, 1) = static_cast<double>(i / 4);
    p.at(i, 0) = static_cast<double>((i * 5) % 3);
    p.at(i, 1) = static_cast<double>((i * 7) % 4);
  }
  const std::vector<int> y{1, 2, 3, 1, 2, 3, 1, 2, 3, 1, 2, 3};
  EXPECT_EQ(trustworthiness(x, p, 3), oracle::trustworthiness(x, p, 3));
  EXPECT_EQ(continuity(x, p, 3), oracle::continuity(x, p, 3));
  EXPECT_EQ(neighborhood_hit(p, y, 3), oracle::neighborhood_hit(p, y, 3));
  EXPECT_NEAR(shepard_correlation(x, p), oracle::shepard(x, p), 1e-12);
}

TEST(AverageRanks, SharesTiedRanks) {
  EXPECT_EQ(average_ranks(std::vector<double>{3.0, 1.0, 3.0, 2.0}), (std::vector<double>{3.5, 1.0, 3.5, 2.0}));
  EXPECT_EQ(average_ranks(std::vector<double>{5, 5, 5}), (std::vector<double>{2, 2, 2}));
}

TEST(Invariants, RangesOnRandomInstances) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Tensor x = random_points(40, 5, 100 + seed), p = random_points(40, 2, 200 + seed);
    const auto r = evaluate_all(x, p, random_labels(40, 3, seed), 5);
    for (double v : {r.trustworthiness, r.continuity, *r.neighborhood_hit, *r.distance_consistency}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_GE(r.shepard_correlation, -1.0);
    EXPECT_LE(r.shepard_correlation, 1.0);
    EXPECT_GE(r.normalized_stress, 0.0);
  }
}

TEST(Invariants, RigidAndScaleInvariance) {
  const Tensor x = random_points(50, 4, 300), p = random_points(50, 2, 301);
  const auto y = random_labels(50, 3, 302);
  const auto base = evaluate_all(x, p, y, 6);
  const double angle = std::numbers::pi / 5;
  const auto moved = evaluate_all(x, rigid(p, angle, 7.0, -3.0), y, 6);
  EXPECT_EQ(moved.trustworthiness, base.trustworthiness);
  EXPECT_EQ(moved.continuity, base.continuity);
  EXPECT_NEAR(moved.shepard_correlation, base.shepard_correlation, 1e-12);
  EXPECT_NEAR(moved.normalized_stress, base.normalized_stress, 1e-9);
  EXPECT_EQ(*moved.neighborhood_hit, *base.neighborhood_hit);
  EXPECT_EQ(*moved.distance_consistency, *base.distance_consistency);

  const auto scaled = evaluate_all(x, rigid(p, angle, 1.0, 2.0, 3.0), y, 6);
  EXPECT_EQ(scaled.trustworthiness, base.trustworthiness);
  EXPECT_EQ(scaled.continuity, base.continuity);
  EXPECT_NEAR(scaled.shepard_correlation, base.shepard_correlation, 1e-12);
  EXPECT_EQ(*scaled.neighborhood_hit, *base.neighborhood_hit);
  EXPECT_EQ(*scaled.distance_consistency, *base.distance_consistency);
  EXPECT_GT(std::abs(scaled.normalized_stress - base.normalized_stress), 0.1);
}

TEST(EvaluateAll, MatchesIndividualMetricsBitwise) {
  const Tensor x = random_points(60, 6, 400), p = random_points(60, 2, 401);
  const auto y = random_labels(60, 4, 402);
  const auto r = evaluate_all(x, p, y, 7);
  EXPECT_EQ(r.k, 7u);
  EXPECT_EQ(r.trustworthiness, trustworthiness(x, p, 7));
  EXPECT_EQ(r.continuity, continuity(x, p, 7));
  EXPECT_EQ(r.shepard_correlation, shepard_correlation(x, p));
  EXPECT_EQ(r.normalized_stress, normalized_stress(x, p));
  EXPECT_EQ(*r.neighborhood_hit, neighborhood_hit(p, y, 7));
  EXPECT_EQ(*r.distance_consistency, distance_consistency(p, y));
  const auto unlabeled = evaluate_all(x, p, {}, 7);
  EXPECT_FALSE(unlabeled.neighborhood_hit.has_value());
  EXPECT_FALSE(unlabeled.distance_consistency.has_value());
}

TEST(EvaluateAll, IdentityOnSeparatedBlobs) {
  const auto blobs = sharp::testing::make_blobs(3, 20, 2, 10.0, 0.2, 500);
  const auto r = evaluate_all(blobs.x, blobs.x, blobs.labels, 5);
  EXPECT_EQ(r.trustworthiness, 1.0);
  EXPECT_EQ(r.continuity, 1.0);
  EXPECT_EQ(r.normalized_stress, 0.0);
  EXPECT_EQ(*r.distance_consistency, 1.0);
  EXPECT_NEAR(r.shepard_correlation, 1.0, 1e-12);
}
