#include "sharp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sharp {

double euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

namespace {

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2 || t.rows() == 0) {
    throw std::invalid_argument(std::string(what) + " must be a nonempty matrix");
  }
}

void require_paired(const Tensor& x, const Tensor& p) {
  require_matrix(x, "data");
  require_matrix(p, "projection");
  if (x.rows() != p.rows()) {
    throw std::invalid_argument("data has " + std::to_string(x.rows()) + " rows but projection has " +
                                std::to_string(p.rows()));
  }
}

void require_labels(const Tensor& p, std::span<const int> labels) {
  require_matrix(p, "projection");
  if (labels.size() != p.rows()) {
    throw std::invalid_argument(std::to_string(labels.size()) + " labels for " +
                                std::to_string(p.rows()) + " points");
  }
  for (int l : labels) {
    if (l < 1) throw std::invalid_argument("labels must be in 1..K, got " + std::to_string(l));
  }
}

// Pairwise distances of one point set, cached as a full matrix when it fits.
class Distances {
 public:
  explicit Distances(const Tensor& t) : t_(t), m_(t.rows()) {
    if (m_ <= kCacheRows) {
      cache_.resize(m_ * m_);
      for (std::size_t i = 0; i < m_; ++i) {
        cache_[i * m_ + i] = 0.0;
        for (std::size_t j = i + 1; j < m_; ++j) {
          cache_[i * m_ + j] = cache_[j * m_ + i] = euclidean(t.row(i), t.row(j));
        }
      }
    }
  }

  std::size_t size() const { return m_; }

  /// Distances from point i to every point.
  std::span<const double> row(std::size_t i, std::vector<double>& scratch) const {
    if (!cache_.empty()) return {cache_.data() + i * m_, m_};
    scratch.resize(m_);
    for (std::size_t j = 0; j < m_; ++j) scratch[j] = euclidean(t_.row(i), t_.row(j));
    return scratch;
  }

  std::vector<double> upper_triangle() const {
    std::vector<double> d;
    d.reserve(m_ * (m_ - 1) / 2);
    std::vector<double> scratch;
    for (std::size_t i = 0; i < m_; ++i) {
      const auto r = row(i, scratch);
      d.insert(d.end(), r.begin() + static_cast<std::ptrdiff_t>(i + 1), r.end());
    }
    return d;
  }

 private:
  static constexpr std::size_t kCacheRows = 6000;
  const Tensor& t_;
  std::size_t m_;
  std::vector<double> cache_;
};

std::vector<std::size_t> nearest(const Distances& dist, std::size_t k) {
  const std::size_t m = dist.size();
  if (k < 1 || k >= m) {
    throw std::invalid_argument("neighbourhood size k=" + std::to_string(k) + " must be in [1, " +
                                std::to_string(m - 1) + "] for " + std::to_string(m) + " points");
  }
  std::vector<std::size_t> ids(m * k), order(m);
  std::vector<double> scratch;
  for (std::size_t i = 0; i < m; ++i) {
    const auto d = dist.row(i, scratch);
    std::iota(order.begin(), order.end(), 0);
    std::swap(order[i], order[m - 1]);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end() - 1,
                      [&d](std::size_t a, std::size_t b) { return d[a] < d[b] || (d[a] == d[b] && a < b); });
    std::copy_n(order.begin(), k, ids.begin() + static_cast<std::ptrdiff_t>(i * k));
  }
  return ids;
}

// Trustworthiness from ranks in `ranked` of the k-neighbours in `other`.
double trust_from(const Distances& ranked, const Distances& other, std::size_t k) {
  const std::size_t m = ranked.size();
  if (k < 1 || 3 * k >= 2 * m - 1) {
    throw std::invalid_argument("trustworthiness needs 1 <= k < (2m-1)/3; got k=" + std::to_string(k) +
                                ", m=" + std::to_string(m));
  }
  const auto neighbours = nearest(other, k);
  long long penalty = 0;
  std::vector<double> scratch;
  for (std::size_t i = 0; i < m; ++i) {
    const auto d = ranked.row(i, scratch);
    for (std::size_t t = 0; t < k; ++t) {
      const std::size_t j = neighbours[i * k + t];
      // Rank of j among the other points of i.
      std::size_t rank = 1;
      for (std::size_t l = 0; l < m; ++l) {
        if (l == i || l == j) continue;
        if (d[l] < d[j] || (d[l] == d[j] && l < j)) ++rank;
      }
      if (rank > k) penalty += static_cast<long long>(rank - k);
    }
  }
  const double mk = static_cast<double>(m) * static_cast<double>(k);
  const double norm = 2.0 / (mk * (2.0 * static_cast<double>(m) - 3.0 * static_cast<double>(k) - 1.0));
  return 1.0 - norm * static_cast<double>(penalty);
}

double shepard_from(const Distances& x, const Distances& p) {
  if (x.size() < 3) throw std::invalid_argument("Shepard correlation needs at least 3 points");
  const auto rx = average_ranks(x.upper_triangle());
  const auto rp = average_ranks(p.upper_triangle());
  const double mean = 0.5 * (static_cast<double>(rx.size()) + 1.0);  // same for both rank vectors
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double a = rx[i] - mean, b = rp[i] - mean;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw std::invalid_argument("Shepard correlation undefined: all pairwise distances are equal");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double stress_from(const Distances& x, const Distances& p) {
  const auto dx = x.upper_triangle();
  const auto dp = p.upper_triangle();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    const double e = dx[i] - dp[i];
    num += e * e;
    den += dx[i] * dx[i];
  }
  if (den == 0.0) throw std::invalid_argument("normalized stress undefined: all data points coincide");
  return num / den;
}

double hit_from(const Distances& p, std::span<const int> labels, std::size_t k) {
  const auto neighbours = nearest(p, k);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t t = 0; t < k; ++t) hits += labels[neighbours[i * k + t]] == labels[i] ? 1 : 0;
  }
  return static_cast<double>(hits) / (static_cast<double>(p.size()) * static_cast<double>(k));
}

}  // namespace

NeighborIndex::NeighborIndex(const Tensor& points, std::size_t k) : k_(k) {
  require_matrix(points, "points");
  ids_ = nearest(Distances(points), k);
}

std::span<const std::size_t> NeighborIndex::neighbors(std::size_t i) const {
  return {ids_.data() + i * k_, k_};
}

double trustworthiness(const Tensor& x, const Tensor& p, std::size_t k) {
  require_paired(x, p);
  return trust_from(Distances(x), Distances(p), k);
}

double continuity(const Tensor& x, const Tensor& p, std::size_t k) { return trustworthiness(p, x, k); }

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&values](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start + 1;
    while (end < n && values[order[end]] == values[order[start]]) ++end;
    const double r = 0.5 * static_cast<double>(start + end + 1);
    for (std::size_t t = start; t < end; ++t) ranks[order[t]] = r;
    start = end;
  }
  return ranks;
}

double shepard_correlation(const Tensor& x, const Tensor& p) {
  require_paired(x, p);
  return shepard_from(Distances(x), Distances(p));
}

double normalized_stress(const Tensor& x, const Tensor& p) {
  require_paired(x, p);
  return stress_from(Distances(x), Distances(p));
}

double neighborhood_hit(const Tensor& p, std::span<const int> labels, std::size_t k) {
  require_labels(p, labels);
  return hit_from(Distances(p), labels, k);
}

double distance_consistency(const Tensor& p, std::span<const int> labels) {
  require_labels(p, labels);
  const std::size_t classes = static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end()));
  const std::size_t q = p.cols();
  Tensor centroids(Shape{classes, q});
  std::vector<std::size_t> counts(classes, 0);
  for (std::size_t i = 0; i < p.rows(); ++i) {
    const std::size_t c = static_cast<std::size_t>(labels[i] - 1);
    ++counts[c];
    for (std::size_t d = 0; d < q; ++d) centroids.at(c, d) += p.at(i, d);
  }
  for (std::size_t c = 0; c < classes; ++c) {
    if (counts[c] == 0) {
      throw std::invalid_argument("distance consistency: class " + std::to_string(c + 1) + " has no points");
    }
    for (std::size_t d = 0; d < q; ++d) centroids.at(c, d) /= static_cast<double>(counts[c]);
  }
  std::size_t consistent = 0;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    std::size_t best = 0;
    double best_d = euclidean(p.row(i), centroids.row(0));
    for (std::size_t c = 1; c < classes; ++c) {
      const double d = euclidean(p.row(i), centroids.row(c));
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    consistent += static_cast<int>(best) + 1 == labels[i] ? 1 : 0;
  }
  return static_cast<double>(consistent) / static_cast<double>(p.rows());
}

MetricsReport evaluate_all(const Tensor& x, const Tensor& p, std::span<const int> labels, std::size_t k) {
  require_paired(x, p);
  if (!labels.empty()) require_labels(p, labels);
  const Distances dx(x), dp(p);
  MetricsReport r;
  r.k = k;
  r.trustworthiness = trust_from(dx, dp, k);
  r.continuity = trust_from(dp, dx, k);
  r.shepard_correlation = shepard_from(dx, dp);
  r.normalized_stress = stress_from(dx, dp);
  if (!labels.empty()) {
    r.neighborhood_hit = hit_from(dp, labels, k);
    r.distance_consistency = distance_consistency(p, labels);
  }
  return r;
}

}  // namespace sharp
