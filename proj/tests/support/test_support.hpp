#pragma once

// Shared fixtures and independent reference implementations for the tests.
// The oracles here are deliberately written from the textbook definitions,
// sharing no code with the library routines they check.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sharp/autodiff.hpp"
#include "sharp/rng.hpp"
#include "sharp/tensor.hpp"

namespace sharp::testing {

/// Isotropic Gaussian blobs in `dims` dimensions, `per_cluster` points each,
/// centres drawn uniformly in [0, spread]^dims; features are min-max scaled
/// to [0, 1]. Labels are 1..clusters, grouped by cluster.
struct Blobs {
  Tensor x;
  std::vector<int> labels;
};
Blobs make_blobs(std::size_t clusters, std::size_t per_cluster, std::size_t dims, double spread, double sigma,
                 std::uint64_t seed);

/// Like make_blobs, but each cluster is additionally stretched along its own
/// random unit direction u: x = c + sigma * (e + stretch * t * u), t ~ N(0, 1).
Blobs make_elongated_blobs(std::size_t clusters, std::size_t per_cluster, std::size_t dims, double spread,
                           double sigma, double stretch, std::uint64_t seed);

/// Uniform [lo, hi] entries.
Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -2.0, double hi = 2.0);

/// Largest group-wise relative error ||analytic - numeric|| / max(||analytic||, ||numeric||, floor)
/// over parameter tensors, with central differences of step h.
struct GradientReport {
  double worst = 0.0;
  std::string worst_group;
};
GradientReport check_gradients(const std::function<ad::Var()>& loss, std::span<ad::Var> params, double h = 1e-5,
                               double floor = 1e-8);

namespace oracle {

double trustworthiness(const Tensor& x, const Tensor& p, std::size_t k);
double continuity(const Tensor& x, const Tensor& p, std::size_t k);
double shepard(const Tensor& x, const Tensor& p);
double stress(const Tensor& x, const Tensor& p);
double neighborhood_hit(const Tensor& p, const std::vector<int>& labels, std::size_t k);
double dsc(const Tensor& p, const std::vector<int>& labels);

/// Within-cluster sum of squares for a labelling.
double wcss(const Tensor& x, const std::vector<int>& labels);

/// Ward objective of the best 2-partition by exhaustive search, and the
/// partition itself (labels 1/2, first point in cluster 1).
std::vector<int> best_two_partition(const Tensor& x);

/// Naive greedy Ward clustering: repeatedly merge the pair with the smallest
/// increase in within-cluster sum of squares, recomputed from centroids.
std::vector<int> greedy_ward(const Tensor& x, std::size_t k);

/// Canonical relabelling by first appearance.
std::vector<int> canonical(const std::vector<int>& labels);

}  // namespace oracle
}  // namespace sharp::testing
