#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "olm/errors.hpp"
#include "olm/grid.hpp"
#include "olm/localization.hpp"

namespace olm {

/// Intersection over union with inclusive pixel areas.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const long long ix0 = std::max(a.x_min, b.x_min);
  const long long iy0 = std::max(a.y_min, b.y_min);
  const long long ix1 = std::min(a.x_max, b.x_max);
  const long long iy1 = std::min(a.y_max, b.y_max);
  long long inter = 0;
  if (ix1 >= ix0 && iy1 >= iy0) inter = (ix1 - ix0 + 1) * (iy1 - iy0 + 1);
  const long long uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

struct EvalRecord {
  std::string image_id;
  std::vector<BoundingBox> predicted;
  std::vector<BoundingBox> ground_truth;
  std::optional<Grid<std::uint8_t>> saliency;  // [0, 255]
  std::optional<Grid<std::uint8_t>> gt_mask;   // {0, 1}
};

/// Best IoU over every (predicted, ground-truth) pair; 0 when either list is empty.
inline double best_pair_iou(const EvalRecord& record) {
  double best = 0.0;
  for (const auto& p : record.predicted) {
    for (const auto& g : record.ground_truth) best = std::max(best, iou(p, g));
  }
  return best;
}

inline bool is_correct_localization(const EvalRecord& record, double threshold = 0.5) {
  return best_pair_iou(record) > threshold;
}

/// Fraction of images whose best pair clears IoU > threshold (strict).
inline double corloc(std::span<const EvalRecord> records, double threshold = 0.5) {
  if (records.empty()) throw ArgumentError("corloc needs at least one record");
  std::size_t correct = 0;
  for (const auto& r : records) {
    if (is_correct_localization(r, threshold)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

/// Min-max rescale to [0, 255], rounding half away from zero. A constant map
/// (no contrast) becomes all zeros.
inline Grid<std::uint8_t> normalize_saliency(const Grid<double>& map) {
  Grid<std::uint8_t> out(map.rows(), map.cols(), 0);
  if (map.empty()) return out;
  for (double v : map) {
    if (!std::isfinite(v)) throw ValidationError("saliency input contains a non-finite value");
  }
  const auto [lo_it, hi_it] = std::minmax_element(map.begin(), map.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  if (range <= 0.0) return out;
  for (std::size_t p = 0; p < map.size(); ++p) {
    const double scaled = (map[p] - lo) / range * 255.0;
    out[p] = static_cast<std::uint8_t>(std::clamp(std::lround(scaled), 0L, 255L));
  }
  return out;
}

namespace detail {

inline void check_mask(const Grid<std::uint8_t>& gt) {
  for (auto v : gt) {
    if (v > 1) throw ArgumentError("ground-truth mask values must be 0 or 1");
  }
}

}  // namespace detail

/// Mean absolute error between a [0,1] saliency map and a {0,1} mask.
inline double mae(const Grid<double>& saliency, const Grid<std::uint8_t>& gt) {
  if (saliency.rows() != gt.rows() || saliency.cols() != gt.cols()) {
    throw DimensionError("saliency and ground truth differ in size");
  }
  detail::check_mask(gt);
  if (gt.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t p = 0; p < gt.size(); ++p) sum += std::abs(saliency[p] - static_cast<double>(gt[p]));
  return sum / static_cast<double>(gt.size());
}

// 8-bit saliency is divided by 255 first.
inline double mae(const Grid<std::uint8_t>& saliency, const Grid<std::uint8_t>& gt) {
  if (saliency.rows() != gt.rows() || saliency.cols() != gt.cols()) {
    throw DimensionError("saliency and ground truth differ in size");
  }
  Grid<double> unit(saliency.rows(), saliency.cols());
  for (std::size_t p = 0; p < saliency.size(); ++p) unit[p] = saliency[p] / 255.0;
  return mae(unit, gt);
}

inline constexpr double kDefaultBeta2 = 0.3;

/// Weighted harmonic mean (1 + b2) P R / (b2 P + R); 0 when P = R = 0.
inline double f_measure(double precision, double recall, double beta2 = kDefaultBeta2) {
  const double denom = beta2 * precision + recall;
  if (denom <= 0.0) return 0.0;
  return (1.0 + beta2) * precision * recall / denom;
}

struct ConfusionCounts {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;

  double precision() const {
    const auto predicted = true_positive + false_positive;
    return predicted == 0 ? 0.0
                          : static_cast<double>(true_positive) / static_cast<double>(predicted);
  }
  double recall() const {
    const auto actual = true_positive + false_negative;
    return actual == 0 ? 0.0 : static_cast<double>(true_positive) / static_cast<double>(actual);
  }
};

struct MaxFResult {
  double f = 0.0;
  int threshold = 0;
};

/// Best F over binarizations sal > t for t in {-1, 0, ..., 255}. The
/// reported threshold is the smallest maximizer, clamped to [0, 255].
inline MaxFResult max_f_measure(const Grid<std::uint8_t>& saliency, const Grid<std::uint8_t>& gt,
                                double beta2 = kDefaultBeta2) {
  if (saliency.rows() != gt.rows() || saliency.cols() != gt.cols()) {
    throw DimensionError("saliency and ground truth differ in size");
  }
  detail::check_mask(gt);
  std::array<std::size_t, 256> pos{};
  std::array<std::size_t, 256> neg{};
  std::size_t total_pos = 0;
  for (std::size_t p = 0; p < gt.size(); ++p) {
    if (gt[p]) {
      ++pos[saliency[p]];
      ++total_pos;
    } else {
      ++neg[saliency[p]];
    }
  }
  if (total_pos == 0) throw ArgumentError("ground-truth mask has no positive pixel; recall undefined");

  // Walk thresholds from 255 down to -1, accumulating pixels with value > t.
  std::array<ConfusionCounts, 257> at{};  // index t + 1
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (int t = 255; t >= -1; --t) {
    at[static_cast<std::size_t>(t + 1)] = {tp, fp, total_pos - tp};
    if (t >= 0) {
      tp += pos[static_cast<std::size_t>(t)];
      fp += neg[static_cast<std::size_t>(t)];
    }
  }
  MaxFResult best{-1.0, 0};
  for (int t = -1; t <= 255; ++t) {
    const auto& c = at[static_cast<std::size_t>(t + 1)];
    const double f = f_measure(c.precision(), c.recall(), beta2);
    if (f > best.f) best = {f, std::max(t, 0)};
  }
  return best;
}

}  // namespace olm
