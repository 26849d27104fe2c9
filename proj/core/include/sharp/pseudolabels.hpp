#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "sharp/tensor.hpp"

namespace sharp {

struct LabelSource {
  enum class Kind { GroundTruth, KMeans, Agglomerative };
  Kind kind = Kind::GroundTruth;
  std::size_t k = 0;  // 0: use the data's class count

  /// "gt", "kmeans[:K]" or "agglo[:K]" (K >= 2).
  static LabelSource parse(std::string_view text);
  std::string describe() const;
};

struct KMeansResult {
  std::vector<int> labels;           // 1..K, canonical order
  Tensor centroids;                  // [K, n], row k-1 is cluster k
  std::vector<double> wcss_history;  // after every Lloyd update
  std::size_t iterations = 0;
};

/// Lloyd iterations from k-means++ seeding until the assignment stops
/// changing or `max_iter` is reached. A cluster that empties is re-seeded
/// with the point farthest from its current centroid.
KMeansResult kmeans(const Tensor& x, std::size_t k, std::uint64_t seed, std::size_t max_iter = 300);

/// Ward-linkage agglomerative clustering cut at k clusters. Exact for Ward
/// (a reducible linkage) via the nearest-neighbour chain over a condensed
/// Lance-Williams distance matrix; m is capped at 20000.
std::vector<int> agglomerative(const Tensor& x, std::size_t k);

/// Relabels so clusters are numbered 1, 2, ... in order of first appearance.
std::vector<int> canonical_labels(std::span<const int> labels);

/// Sum over points of the squared distance to their cluster mean.
double within_cluster_ss(const Tensor& x, std::span<const int> labels);

}  // namespace sharp
