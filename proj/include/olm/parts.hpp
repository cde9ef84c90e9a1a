#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "olm/errors.hpp"
#include "olm/grid.hpp"
#include "olm/localization.hpp"

namespace olm {

struct PartSpec {
  std::size_t index = 0;  // 1-based
  int center_x = 0;
  int center_y = 0;
  double side = 0.0;

  friend bool operator==(const PartSpec&, const PartSpec&) = default;
};

struct KMeansOptions {
  std::size_t max_iterations = 300;
  double relative_tolerance = 1e-6;
  // Multiplier applied to S(x,y) before clustering; 1 keeps the raw triple.
  double support_weight = 1.0;
};

using Point3 = std::array<double, 3>;

struct KMeansResult {
  std::vector<Point3> centroids;
  std::vector<std::size_t> assignment;
  // Objective after each assignment step.
  std::vector<double> objective_history;
  std::size_t iterations = 0;
};

namespace detail {

inline double squared_distance(const Point3& a, const Point3& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

// Uniform double in [0, 1) from the raw engine output; avoids the
// implementation-defined std:: distributions so seeds are portable.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::vector<Point3> seed_plus_plus(const std::vector<Point3>& points, std::size_t k,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Point3> centers;
  centers.reserve(k);
  centers.push_back(points[static_cast<std::size_t>(rng() % points.size())]);

  std::vector<double> nearest(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    nearest[i] = squared_distance(points[i], centers[0]);
  }
  while (centers.size() < k) {
    double total = 0.0;
    for (double d : nearest) total += d;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = unit_uniform(rng) * total;
      double acc = 0.0;
      pick = points.size() - 1;
      for (std::size_t i = 0; i < points.size(); ++i) {
        acc += nearest[i];
        if (acc > target && nearest[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(rng() % points.size());
    }
    centers.push_back(points[pick]);
    for (std::size_t i = 0; i < points.size(); ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(points[i], centers.back()));
    }
  }
  return centers;
}

}  // namespace detail

/// Lloyd's k-means with k-means++ seeding driven by `seed`.
///
/// Stops at a fixed point, when the objective's relative decrease drops
/// below the tolerance, or at the iteration cap. A cluster left empty by an
/// assignment step is given the point farthest from its current centroid.
inline KMeansResult kmeans(const std::vector<Point3>& points, std::size_t k, std::uint64_t seed,
                           const KMeansOptions& options = {}) {
  if (k == 0) throw ArgumentError("k must be >= 1");
  if (points.size() < k) {
    throw InfeasibleError("k-means needs at least " + std::to_string(k) + " points, got " +
                          std::to_string(points.size()));
  }
  KMeansResult result;
  result.centroids = detail::seed_plus_plus(points, k, seed);
  result.assignment.assign(points.size(), SIZE_MAX);

  std::vector<double> dist(points.size());
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      std::size_t best = 0;
      double best_d = detail::squared_distance(points[i], result.centroids[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double d = detail::squared_distance(points[i], result.centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (result.assignment[i] != best) changed = true;
      result.assignment[i] = best;
      dist[i] = best_d;
    }

    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t a : result.assignment) ++sizes[a];
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      // Farthest point from a cluster holding more than one member.
      std::size_t far = SIZE_MAX;
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (sizes[result.assignment[i]] < 2) continue;
        if (far == SIZE_MAX || dist[i] > dist[far]) far = i;
      }
      if (far == SIZE_MAX) break;
      --sizes[result.assignment[far]];
      result.assignment[far] = c;
      sizes[c] = 1;
      result.centroids[c] = points[far];
      dist[far] = 0.0;
      changed = true;
    }

    double objective = 0.0;
    for (double d : dist) objective += d;
    result.objective_history.push_back(objective);
    result.iterations = iter + 1;

    std::vector<Point3> sums(k, Point3{0.0, 0.0, 0.0});
    for (std::size_t i = 0; i < points.size(); ++i) {
      auto& s = sums[result.assignment[i]];
      for (int d = 0; d < 3; ++d) s[d] += points[i][d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] == 0) continue;
      for (int d = 0; d < 3; ++d) result.centroids[c][d] = sums[c][d] / static_cast<double>(sizes[c]);
    }

    if (!changed) break;
    const auto& hist = result.objective_history;
    if (hist.size() >= 2) {
      const double prev = hist[hist.size() - 2];
      if (prev > 0.0 && (prev - objective) / prev < options.relative_tolerance) break;
      if (prev == 0.0) break;
    }
  }
  return result;
}

/// (x, y, S(x,y)) for every nonzero pixel of the map, in row-major order.
inline std::vector<Point3> support_points(const SupportMap& map, double support_weight = 1.0) {
  std::vector<Point3> points;
  for (std::size_t y = 0; y < map.rows(); ++y) {
    for (std::size_t x = 0; x < map.cols(); ++x) {
      const double s = map.values(y, x);
      if (s != 0.0) {
        points.push_back({static_cast<double>(x), static_cast<double>(y), s * support_weight});
      }
    }
  }
  return points;
}

struct PixelCenter {
  int x = 0;
  int y = 0;
  friend bool operator==(const PixelCenter&, const PixelCenter&) = default;
};

/// K part centers: k-means over the nonzero support pixels, each centroid's
/// (x, y) rounded to the nearest pixel.
inline std::vector<PixelCenter> cluster_parts(const SupportMap& map, std::size_t k,
                                              std::uint64_t seed,
                                              const KMeansOptions& options = {}) {
  const auto points = support_points(map, options.support_weight);
  if (k == 0) throw ArgumentError("number of parts must be >= 1");
  if (points.size() < k) {
    throw InfeasibleError("support map has " + std::to_string(points.size()) +
                          " nonzero pixels, fewer than K = " + std::to_string(k));
  }
  const auto result = kmeans(points, k, seed, options);
  std::vector<PixelCenter> centers;
  centers.reserve(k);
  for (const auto& c : result.centroids) {
    const int x = static_cast<int>(std::lround(c[0]));
    const int y = static_cast<int>(std::lround(c[1]));
    centers.push_back({std::clamp(x, 0, static_cast<int>(map.cols()) - 1),
                       std::clamp(y, 0, static_cast<int>(map.rows()) - 1)});
  }
  return centers;
}

/// l = lambda * min(width, height) of the object box.
inline double part_side_length(const BoundingBox& box, double lambda) {
  if (!(lambda > 0.0)) throw ArgumentError("lambda must be > 0");
  return lambda * static_cast<double>(std::min(box.width(), box.height()));
}

/// 1 where |x - cx| <= l/2 and |y - cy| <= l/2, clipped to the image.
inline BinaryGrid part_mask(PixelCenter center, double side, std::size_t img_h,
                            std::size_t img_w) {
  if (!(side > 0.0)) throw ArgumentError("part side must be > 0");
  BinaryGrid mask(img_h, img_w, 0);
  const double half = side / 2.0;
  const auto lo = [half](int c) { return static_cast<long long>(std::ceil(c - half)); };
  const auto hi = [half](int c) { return static_cast<long long>(std::floor(c + half)); };
  const long long y0 = std::max(0LL, lo(center.y));
  const long long y1 = std::min(static_cast<long long>(img_h) - 1, hi(center.y));
  const long long x0 = std::max(0LL, lo(center.x));
  const long long x1 = std::min(static_cast<long long>(img_w) - 1, hi(center.x));
  for (long long y = y0; y <= y1; ++y) {
    for (long long x = x0; x <= x1; ++x) mask(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = 1;
  }
  return mask;
}

/// Interleaved H x W x channels pixel array.
template <typename T>
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  std::vector<T> pixels;

  friend bool operator==(const Image&, const Image&) = default;
};

/// Element-wise product of the image with a binary mask, applied to every channel.
template <typename T>
Image<T> crop_part(const Image<T>& image, const BinaryGrid& mask) {
  if (mask.rows() != image.height || mask.cols() != image.width) {
    throw DimensionError("mask is " + std::to_string(mask.rows()) + "x" +
                         std::to_string(mask.cols()) + ", image is " +
                         std::to_string(image.height) + "x" + std::to_string(image.width));
  }
  if (image.pixels.size() != image.height * image.width * image.channels) {
    throw DimensionError("image pixel buffer size mismatch");
  }
  Image<T> out = image;
  for (std::size_t p = 0; p < mask.size(); ++p) {
    if (mask[p] != 0) continue;
    for (std::size_t c = 0; c < image.channels; ++c) out.pixels[p * image.channels + c] = T{};
  }
  return out;
}

/// Full part localization: K clusters on the support map, side length from
/// the object's box.
inline std::vector<PartSpec> locate_parts(const SupportMap& map, const BoundingBox& object_box,
                                          std::size_t k, double lambda, std::uint64_t seed,
                                          const KMeansOptions& options = {}) {
  const double side = part_side_length(object_box, lambda);
  const auto centers = cluster_parts(map, k, seed, options);
  std::vector<PartSpec> parts;
  parts.reserve(centers.size());
  for (std::size_t i = 0; i < centers.size(); ++i) {
    parts.push_back({i + 1, centers[i].x, centers[i].y, side});
  }
  return parts;
}

}  // namespace olm
