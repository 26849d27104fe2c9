#include "sharp/pseudolabels.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include "sharp/rng.hpp"

namespace sharp {

LabelSource LabelSource::parse(std::string_view text) {
  if (text == "gt") return {};
  auto parse_k = [&](std::string_view digits) {
    std::size_t k = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || k < 2) {
      throw std::invalid_argument("cluster count in '" + std::string(text) + "' must be an integer >= 2");
    }
    return k;
  };
  if (text == "kmeans") return {Kind::KMeans, 0};
  if (text == "agglo") return {Kind::Agglomerative, 0};
  if (text.starts_with("kmeans:")) return {Kind::KMeans, parse_k(text.substr(7))};
  if (text.starts_with("agglo:")) return {Kind::Agglomerative, parse_k(text.substr(6))};
  throw std::invalid_argument("unknown label source '" + std::string(text) +
                              "' (expected gt, kmeans[:K] or agglo[:K])");
}

std::string LabelSource::describe() const {
  switch (kind) {
    case Kind::KMeans: return k ? "kmeans:" + std::to_string(k) : "kmeans";
    case Kind::Agglomerative: return k ? "agglo:" + std::to_string(k) : "agglo";
    default: return "gt";
  }
}

std::vector<int> canonical_labels(std::span<const int> labels) {
  std::map<int, int> rename;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) {
    auto [it, inserted] = rename.try_emplace(l, static_cast<int>(rename.size()) + 1);
    out.push_back(it->second);
  }
  return out;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void require_points(const Tensor& x, std::size_t k, const char* who) {
  if (x.rank() != 2) throw std::invalid_argument(std::string(who) + ": data must be a matrix");
  if (k < 1) throw std::invalid_argument(std::string(who) + ": need at least one cluster");
  if (x.rows() < k) {
    throw std::invalid_argument(std::string(who) + ": " + std::to_string(x.rows()) +
                                " points cannot form " + std::to_string(k) + " clusters");
  }
}

Tensor cluster_means(const Tensor& x, std::span<const int> labels, std::size_t k,
                     std::vector<std::size_t>& counts) {
  const std::size_t n = x.cols();
  Tensor c(Shape{k, n});
  counts.assign(k, 0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const std::size_t j = static_cast<std::size_t>(labels[i] - 1);
    ++counts[j];
    const auto row = x.row(i);
    for (std::size_t d = 0; d < n; ++d) c.at(j, d) += row[d];
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (counts[j] == 0) continue;
    for (std::size_t d = 0; d < n; ++d) c.at(j, d) /= static_cast<double>(counts[j]);
  }
  return c;
}

}  // namespace

double within_cluster_ss(const Tensor& x, std::span<const int> labels) {
  const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
  std::vector<std::size_t> counts;
  const Tensor c = cluster_means(x, labels, static_cast<std::size_t>(k), counts);
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    total += squared_distance(x.row(i), c.row(static_cast<std::size_t>(labels[i] - 1)));
  }
  return total;
}

KMeansResult kmeans(const Tensor& x, std::size_t k, std::uint64_t seed, std::size_t max_iter) {
  require_points(x, k, "kmeans");
  const std::size_t m = x.rows(), n = x.cols();
  Rng rng = make_rng(seed, "kmeans");

  // k-means++ seeding.
  Tensor centroids(Shape{k, n});
  std::vector<double> nearest(m, std::numeric_limits<double>::infinity());
  std::size_t first = static_cast<std::size_t>(rng() % m);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t pick = first;
    if (c > 0) {
      const double total = std::accumulate(nearest.begin(), nearest.end(), 0.0);
      if (total > 0.0) {
        double target = uniform_open(rng) * total;
        pick = m - 1;
        for (std::size_t i = 0; i < m; ++i) {
          target -= nearest[i];
          if (target <= 0.0 && nearest[i] > 0.0) {
            pick = i;
            break;
          }
        }
      } else {
        pick = static_cast<std::size_t>(rng() % m);
      }
    }
    std::copy(x.row(pick).begin(), x.row(pick).end(), centroids.row(c).begin());
    for (std::size_t i = 0; i < m; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(x.row(i), centroids.row(c)));
    }
  }

  KMeansResult result;
  std::vector<int> labels(m, 0);
  std::vector<std::size_t> counts;
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < m; ++i) {
      int best = 1;
      double best_d = squared_distance(x.row(i), centroids.row(0));
      for (std::size_t c = 1; c < k; ++c) {
        const double d = squared_distance(x.row(i), centroids.row(c));
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c) + 1;
        }
      }
      if (labels[i] != best) {
        labels[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    ++result.iterations;

    centroids = cluster_means(x, labels, k, counts);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      // Re-seed an empty cluster with the point farthest from its centroid.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t own = static_cast<std::size_t>(labels[i] - 1);
        if (counts[own] < 2) continue;
        const double d = squared_distance(x.row(i), centroids.row(own));
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      labels[far] = static_cast<int>(c) + 1;
      centroids = cluster_means(x, labels, k, counts);
    }
    result.wcss_history.push_back(within_cluster_ss(x, labels));
  }

  // Number clusters by first appearance; permute centroid rows to match.
  const auto canon = canonical_labels(labels);
  Tensor ordered(Shape{k, n});
  for (std::size_t i = 0; i < m; ++i) {
    auto src = centroids.row(static_cast<std::size_t>(labels[i] - 1));
    std::copy(src.begin(), src.end(), ordered.row(static_cast<std::size_t>(canon[i] - 1)).begin());
  }
  result.labels = canon;
  result.centroids = std::move(ordered);
  return result;
}

std::vector<int> agglomerative(const Tensor& x, std::size_t k) {
  require_points(x, k, "agglomerative");
  const std::size_t m = x.rows();
  if (m > 20000) {
    throw std::invalid_argument("agglomerative: " + std::to_string(m) + " points exceed the 20000 cap");
  }
  if (k == m) {
    std::vector<int> out(m);
    std::iota(out.begin(), out.end(), 1);
    return out;
  }

  // Condensed upper-triangular matrix of Ward dissimilarities, initialised
  // with squared Euclidean distances.
  auto slot = [m](std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    return i * m - i * (i + 1) / 2 + (j - i - 1);
  };
  std::vector<double> d(m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) d[slot(i, j)] = squared_distance(x.row(i), x.row(j));
  }

  struct Merge {
    std::size_t a, b;
    double height;
  };
  std::vector<Merge> merges;
  merges.reserve(m - 1);
  std::vector<std::size_t> size(m, 1);
  std::vector<char> active(m, 1);
  std::vector<std::size_t> chain;
  std::size_t remaining = m;

  while (remaining > 1) {
    if (chain.empty()) {
      for (std::size_t i = 0; i < m; ++i) {
        if (active[i]) {
          chain.push_back(i);
          break;
        }
      }
    }
    const std::size_t a = chain.back();
    const std::size_t prev = chain.size() > 1 ? chain[chain.size() - 2] : m;
    std::size_t b = prev;
    double best = prev < m ? d[slot(a, prev)] : std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      if (!active[j] || j == a) continue;
      const double dj = d[slot(a, j)];
      if (dj < best) {
        best = dj;
        b = j;
      }
    }
    if (b != prev) {
      chain.push_back(b);
      continue;
    }
    chain.pop_back();
    chain.pop_back();

    // Merge the reciprocal nearest neighbours a and b into slot lo.
    const std::size_t lo = std::min(a, b), hi = std::max(a, b);
    merges.push_back({lo, hi, best});
    const double na = static_cast<double>(size[lo]), nb = static_cast<double>(size[hi]);
    for (std::size_t j = 0; j < m; ++j) {
      if (!active[j] || j == lo || j == hi) continue;
      const double nj = static_cast<double>(size[j]);
      d[slot(lo, j)] = ((na + nj) * d[slot(lo, j)] + (nb + nj) * d[slot(hi, j)] - nj * best) /
                       (na + nb + nj);
    }
    size[lo] += size[hi];
    active[hi] = 0;
    --remaining;
  }

  // Replay the lowest m - k merges (stable in discovery order) with union-find.
  std::stable_sort(merges.begin(), merges.end(),
                   [](const Merge& l, const Merge& r) { return l.height < r.height; });
  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&parent](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  // Each merge joins the clusters that slots a and b represented when it
  // happened; slot ids survive merges, so map them through union-find.
  for (std::size_t t = 0; t < m - k; ++t) {
    const std::size_t ra = find(merges[t].a), rb = find(merges[t].b);
    parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::vector<int> roots(m);
  for (std::size_t i = 0; i < m; ++i) roots[i] = static_cast<int>(find(i));
  return canonical_labels(roots);
}

}  // namespace sharp
