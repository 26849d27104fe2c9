#pragma once

// Projection quality metrics. All distances are Euclidean and every
// neighbour ordering breaks distance ties by ascending point index.
//
// normalized_stress uses sum (d_X - d_P)^2 / sum d_X^2 over point pairs, an
// unbounded quantity. shepard_correlation is the Spearman correlation of the
// pairwise distances, with average ranks for ties.

#include <optional>
#include <span>
#include <vector>

#include "sharp/tensor.hpp"

namespace sharp {

/// Distance between two equally long vectors.
double euclidean(std::span<const double> a, std::span<const double> b);

class NeighborIndex {
 public:
  /// k nearest neighbours of every row of `points` (self excluded).
  NeighborIndex(const Tensor& points, std::size_t k);

  std::size_t k() const noexcept { return k_; }
  std::size_t size() const noexcept { return k_ == 0 ? 0 : ids_.size() / k_; }
  /// Neighbours of point i ordered by (distance, index).
  std::span<const std::size_t> neighbors(std::size_t i) const;

 private:
  std::size_t k_ = 0;
  std::vector<std::size_t> ids_;
};

struct MetricsReport {
  double trustworthiness = 0.0;
  double continuity = 0.0;
  double shepard_correlation = 0.0;
  double normalized_stress = 0.0;
  std::optional<double> neighborhood_hit;      // needs labels
  std::optional<double> distance_consistency;  // needs labels
  std::size_t k = 7;
};

double trustworthiness(const Tensor& x, const Tensor& p, std::size_t k);
double continuity(const Tensor& x, const Tensor& p, std::size_t k);
double shepard_correlation(const Tensor& x, const Tensor& p);
double normalized_stress(const Tensor& x, const Tensor& p);
/// Labels in {1..K}, one per row of p.
double neighborhood_hit(const Tensor& p, std::span<const int> labels, std::size_t k);
double distance_consistency(const Tensor& p, std::span<const int> labels);

/// All six metrics; the label-dependent ones are left empty when `labels` is.
MetricsReport evaluate_all(const Tensor& x, const Tensor& p, std::span<const int> labels,
                           std::size_t k = 7);

/// Average (1-based) ranks of `values`; tied values share the mean rank.
std::vector<double> average_ranks(std::span<const double> values);

}  // namespace sharp
