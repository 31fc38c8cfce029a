#pragma once

// Decision prototypes: seeded k-means over sentence embeddings and
// nearest-centroid lookup under the Euclidean metric.

#include <limits>
#include <span>
#include <vector>

#include "comatch/core.hpp"
#include "comatch/random.hpp"

namespace comatch {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

struct NearestPrototype {
  std::size_t index = 0;
  // Set for an all-zero query vector, which is mapped to prototype 0.
  bool degenerate = false;
};

inline NearestPrototype nearest_prototype(std::span<const double> v, const std::vector<Vector>& centroids) {
  if (centroids.empty()) throw RangeError("no centroids to assign against");
  for (std::size_t k = 0; k < centroids.size(); ++k)
    if (centroids[k].size() != v.size())
      throw RangeError("dimension mismatch: vector has " + std::to_string(v.size()) + ", centroid " +
                       std::to_string(k) + " has " + std::to_string(centroids[k].size()));
  bool all_zero = true;
  for (double x : v) all_zero = all_zero && x == 0.0;
  if (all_zero) return {0, true};
  NearestPrototype best;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < centroids.size(); ++k) {
    const double d = squared_distance(v, centroids[k]);
    if (d < best_d) {
      best_d = d;
      best.index = k;
    }
  }
  return best;
}

inline std::size_t assign_nearest(std::span<const double> v, const std::vector<Vector>& centroids) {
  return nearest_prototype(v, centroids).index;
}

struct KMeansOptions {
  std::size_t max_iters = 100;
  double tol = 1e-6;
};

struct KMeansResult {
  std::vector<Vector> centroids;
  std::vector<std::size_t> assignments;
  std::size_t iterations = 0;
  // Sum of squared distances to the assigned centroid, after each update.
  std::vector<double> objective_trace;
};

namespace detail {

inline double kmeans_objective(const std::vector<Vector>& points, const std::vector<Vector>& centroids,
                               const std::vector<std::size_t>& assign) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) s += squared_distance(points[i], centroids[assign[i]]);
  return s;
}

// k-means++ seeding: first centre uniform, then D^2-weighted draws.
inline std::vector<Vector> kmeanspp_init(const std::vector<Vector>& points, std::size_t k, Rng& rng) {
  std::vector<Vector> centroids;
  centroids.push_back(points[rng.index(points.size())]);
  std::vector<double> d2(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) d2[i] = squared_distance(points[i], centroids[0]);
  while (centroids.size() < k) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t pick;
    if (total > 0.0) {
      pick = rng.categorical(d2);
    } else {
      pick = rng.index(points.size());
    }
    centroids.push_back(points[pick]);
    for (std::size_t i = 0; i < points.size(); ++i)
      d2[i] = std::min(d2[i], squared_distance(points[i], centroids.back()));
  }
  return centroids;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding. Each returned centroid is the mean
/// of the vectors assigned to it; empty clusters are re-seeded with the point
/// farthest from its current centroid.
inline KMeansResult kmeans_fit(const std::vector<Vector>& points, std::size_t k, std::uint64_t seed,
                               KMeansOptions opts = {}) {
  if (k == 0) throw ConfigError("k-means needs at least one cluster");
  if (points.size() < k)
    throw InsufficientDataError("k-means needs at least " + std::to_string(k) + " vectors, got " +
                                std::to_string(points.size()));
  const std::size_t dim = points.front().size();
  for (const auto& p : points)
    if (p.size() != dim) throw RangeError("k-means: vectors have inconsistent dimensions");

  Rng rng(seed);
  KMeansResult res;
  res.centroids = detail::kmeanspp_init(points, k, rng);
  std::vector<std::size_t> assign(points.size(), 0);
  bool have_assignment = false;

  for (std::size_t it = 0; it < opts.max_iters; ++it) {
    std::vector<std::size_t> next(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) next[i] = assign_nearest(points[i], res.centroids);
    if (have_assignment && next == assign) break;
    assign = std::move(next);
    have_assignment = true;
    res.iterations = it + 1;

    std::vector<std::size_t> counts(k, 0);
    for (auto a : assign) ++counts[a];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (counts[assign[i]] < 2) continue;
        const double d = squared_distance(points[i], res.centroids[assign[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      --counts[assign[far]];
      assign[far] = c;
      counts[c] = 1;
    }

    std::vector<Vector> means(k, Vector(dim, 0.0));
    for (std::size_t i = 0; i < points.size(); ++i)
      for (std::size_t d = 0; d < dim; ++d) means[assign[i]][d] += points[i][d];
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      for (double& x : means[c]) x /= static_cast<double>(counts[c]);
      shift = std::max(shift, std::sqrt(squared_distance(means[c], res.centroids[c])));
    }
    res.centroids = std::move(means);
    res.objective_trace.push_back(detail::kmeans_objective(points, res.centroids, assign));
    if (shift < opts.tol) break;
  }
  res.assignments = std::move(assign);
  return res;
}

}  // namespace comatch
