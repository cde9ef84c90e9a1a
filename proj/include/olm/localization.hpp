#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "olm/errors.hpp"
#include "olm/grid.hpp"
#include "olm/itemset_miner.hpp"
#include "olm/tensor_store.hpp"

namespace olm {

using BinaryGrid = Grid<std::uint8_t>;

enum class Connectivity { Four = 4, Eight = 8 };
enum class KeepMode { Largest, All };
enum class MapScale { Grid, Image };

/// Row-major position indices of one connected region, ascending.
using Component = std::vector<std::size_t>;

struct SupportMap {
  Grid<double> values;
  MapScale scale = MapScale::Grid;
  bool no_object = false;

  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t cols() const noexcept { return values.cols(); }
};

/// Inclusive pixel box.
struct BoundingBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;
  std::size_t pixel_count = 0;

  int width() const noexcept { return x_max - x_min + 1; }
  int height() const noexcept { return y_max - y_min + 1; }
  long long area() const noexcept {
    return static_cast<long long>(width()) * static_cast<long long>(height());
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

inline BinaryGrid select_frequent_positions(const FrequencyGrid& grid, double alpha) {
  check_alpha(alpha);
  BinaryGrid marked(grid.rows(), grid.cols(), 0);
  for (std::size_t p = 0; p < marked.size(); ++p) {
    marked[p] = meets_support(grid.counts[p], grid.n_transactions, alpha) ? 1 : 0;
  }
  return marked;
}

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // The smaller root wins so a set's root is its minimum element.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) {
      parent_[b] = a;
    } else {
      parent_[a] = b;
    }
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace detail

/// Maximal connected sets of nonzero cells, largest first; equal sizes are
/// ordered by their smallest position index.
template <typename T>
std::vector<Component> connected_components(const Grid<T>& mask,
                                            Connectivity connectivity = Connectivity::Eight) {
  const std::size_t rows = mask.rows();
  const std::size_t cols = mask.cols();
  detail::DisjointSets sets(mask.size());

  // Single raster pass linking each cell to its already-visited neighbours.
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t p = r * cols + c;
      if (mask[p] == T{}) continue;
      if (c > 0 && mask[p - 1] != T{}) sets.unite(p, p - 1);
      if (r > 0) {
        const std::size_t up = p - cols;
        if (mask[up] != T{}) sets.unite(p, up);
        if (connectivity == Connectivity::Eight) {
          if (c > 0 && mask[up - 1] != T{}) sets.unite(p, up - 1);
          if (c + 1 < cols && mask[up + 1] != T{}) sets.unite(p, up + 1);
        }
      }
    }
  }

  std::vector<Component> components;
  std::vector<std::size_t> slot(mask.size(), SIZE_MAX);
  for (std::size_t p = 0; p < mask.size(); ++p) {
    if (mask[p] == T{}) continue;
    const std::size_t root = sets.find(p);
    if (slot[root] == SIZE_MAX) {
      slot[root] = components.size();
      components.emplace_back();
    }
    components[slot[root]].push_back(p);
  }
  // Components were created in order of their minimum position, so a stable
  // sort by size gives the required tie-break.
  std::stable_sort(components.begin(), components.end(),
                   [](const Component& a, const Component& b) { return a.size() > b.size(); });
  return components;
}

/// Support map restricted to the kept component(s): ratio inside, 0 outside.
inline SupportMap build_support_map(const FrequencyGrid& grid,
                                    const std::vector<Component>& components,
                                    KeepMode keep = KeepMode::Largest) {
  SupportMap map{Grid<double>(grid.rows(), grid.cols(), 0.0), MapScale::Grid, false};
  if (components.empty()) {
    map.no_object = true;
    return map;
  }
  const std::size_t kept = keep == KeepMode::Largest ? 1 : components.size();
  for (std::size_t i = 0; i < kept; ++i) {
    for (std::size_t p : components[i]) {
      if (p >= map.values.size()) throw DimensionError("component position outside grid");
      map.values[p] = grid.ratio(p);
    }
  }
  return map;
}

inline SupportMap upsample_support(const SupportMap& map, std::size_t img_h, std::size_t img_w) {
  if (map.scale != MapScale::Grid) throw ArgumentError("support map is already image scale");
  return {resize_bilinear(map.values, img_h, img_w), MapScale::Image, map.no_object};
}

inline BoundingBox component_box(const Component& component, std::size_t cols) {
  BoundingBox box;
  box.x_min = box.y_min = std::numeric_limits<int>::max();
  box.x_max = box.y_max = std::numeric_limits<int>::min();
  for (std::size_t p : component) {
    const int y = static_cast<int>(p / cols);
    const int x = static_cast<int>(p % cols);
    box.x_min = std::min(box.x_min, x);
    box.x_max = std::max(box.x_max, x);
    box.y_min = std::min(box.y_min, y);
    box.y_max = std::max(box.y_max, y);
  }
  box.pixel_count = component.size();
  return box;
}

/// One tight box per connected nonzero region, largest region first.
inline std::vector<BoundingBox> extract_boxes_multi(
    const SupportMap& map, std::optional<std::size_t> max_boxes = {},
    Connectivity connectivity = Connectivity::Eight) {
  auto components = connected_components(map.values, connectivity);
  if (max_boxes && components.size() > *max_boxes) components.resize(*max_boxes);
  std::vector<BoundingBox> boxes;
  boxes.reserve(components.size());
  for (const auto& comp : components) boxes.push_back(component_box(comp, map.cols()));
  return boxes;
}

/// Box of the largest connected nonzero region; nullopt when the map is all
/// zero ("no object found").
inline std::optional<BoundingBox> extract_box_single(
    const SupportMap& map, Connectivity connectivity = Connectivity::Eight) {
  auto boxes = extract_boxes_multi(map, 1, connectivity);
  if (boxes.empty()) return std::nullopt;
  return boxes.front();
}

}  // namespace olm
