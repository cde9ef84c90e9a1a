#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "olm/errors.hpp"
#include "olm/itemset_miner.hpp"
#include "olm/localization.hpp"
#include "olm/metrics.hpp"
#include "olm/parts.hpp"
#include "olm/tensor_store.hpp"
#include "olm/transactions.hpp"

namespace olm {

/// Default support ratio for part mode.
inline constexpr double kPartAlpha = 0.07;

/// Resolved settings for one pipeline run.
struct PipelineConfig {
  double alpha = 0.06;
  Connectivity connectivity = Connectivity::Eight;
  KeepMode keep = KeepMode::Largest;
  std::optional<std::size_t> max_boxes;
  std::size_t parts_k = 4;
  double lambda = 0.25;
  std::uint64_t seed = 0;
  // Tensor names to merge, in order. Empty: every tensor in the file.
  std::vector<std::string> layers;

  void validate() const {
    check_alpha(alpha);
    if (parts_k < 1) throw ArgumentError("k must be >= 1");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ArgumentError("lambda must be > 0");
    if (max_boxes && *max_boxes == 0) throw ArgumentError("max_boxes must be >= 1");
  }
};

inline std::string to_string(Connectivity c) { return c == Connectivity::Four ? "4" : "8"; }
inline std::string to_string(KeepMode k) { return k == KeepMode::Largest ? "largest" : "all"; }

inline Connectivity parse_connectivity(const std::string& text) {
  if (text == "4") return Connectivity::Four;
  if (text == "8") return Connectivity::Eight;
  throw ArgumentError("connectivity must be 4 or 8, got '" + text + "'");
}

inline KeepMode parse_keep(const std::string& text) {
  if (text == "largest") return KeepMode::Largest;
  if (text == "all") return KeepMode::All;
  throw ArgumentError("keep must be 'largest' or 'all', got '" + text + "'");
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T value{};
  in >> value;
  if (in.fail() || !in.eof()) {
    throw ArgumentError("invalid value '" + text + "' for '" + key + "'");
  }
  return value;
}

}  // namespace detail

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item = detail::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/// Flat "key = value" lines; '#' starts a comment. Later keys win.
inline std::map<std::string, std::string> parse_config_text(std::istream& in) {
  std::map<std::string, std::string> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    auto key = detail::trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '-', '_');
    entries[key] = detail::trim(line.substr(eq + 1));
  }
  return entries;
}

/// Applies one setting by name. Keys mirror the CLI flags with '_' for '-'.
inline void apply_setting(PipelineConfig& config, const std::string& key, const std::string& value) {
  if (key == "alpha") {
    config.alpha = detail::parse_number<double>(key, value);
  } else if (key == "connectivity") {
    config.connectivity = parse_connectivity(value);
  } else if (key == "keep") {
    config.keep = parse_keep(value);
  } else if (key == "max_boxes") {
    if (value.empty() || value == "none" || value == "all") {
      config.max_boxes.reset();
    } else {
      config.max_boxes = detail::parse_number<std::size_t>(key, value);
    }
  } else if (key == "k" || key == "parts_k") {
    config.parts_k = detail::parse_number<std::size_t>(key, value);
  } else if (key == "lambda") {
    config.lambda = detail::parse_number<double>(key, value);
  } else if (key == "seed") {
    config.seed = detail::parse_number<std::uint64_t>(key, value);
  } else if (key == "layers") {
    config.layers = split_list(value);
  } else {
    throw ArgumentError("unknown config key '" + key + "'");
  }
}

/// Picks the configured tensors, resizes each to the reference grid and
/// concatenates their channels in order.
///
/// The reference grid is the tensor named "relu5" when it is selected,
/// otherwise the selected tensor with the most grid cells (first on ties).
inline FeatureStack prepare_stack(const std::vector<FeatureStack>& tensors,
                                  const std::vector<std::string>& layers) {
  std::vector<const FeatureStack*> chosen;
  if (layers.empty()) {
    for (const auto& t : tensors) chosen.push_back(&t);
  } else {
    for (const auto& name : layers) {
      auto it = std::find_if(tensors.begin(), tensors.end(),
                             [&](const FeatureStack& t) { return t.layer_name() == name; });
      if (it == tensors.end()) throw FormatError("layer '" + name + "' not found in feature file");
      chosen.push_back(&*it);
    }
  }
  if (chosen.empty()) throw FormatError("feature file contains no tensors");

  const FeatureStack* reference = chosen.front();
  for (const auto* t : chosen) {
    if (t->plane_size() > reference->plane_size()) reference = t;
  }
  for (const auto* t : chosen) {
    if (t->layer_name() == "relu5") {
      reference = t;
      break;
    }
  }
  auto aligned = [&](const FeatureStack& t) {
    if (t.height() == reference->height() && t.width() == reference->width()) return t;
    return resize_bilinear(t, reference->height(), reference->width());
  };
  FeatureStack merged = aligned(*chosen.front());
  for (std::size_t i = 1; i < chosen.size(); ++i) merged = merge_stacks(merged, aligned(*chosen[i]));
  return merged;
}

struct LocalizationResult {
  TransactionDatabase transactions;
  FrequencyGrid frequencies;
  std::vector<Component> components;
  SupportMap grid_map;
  SupportMap image_map;
  std::vector<BoundingBox> boxes;

  bool no_object() const noexcept { return grid_map.no_object; }
};

/// merged stack -> transactions -> item frequencies -> alpha selection ->
/// connected components -> support map -> upsampled map -> boxes.
inline LocalizationResult localize(const FeatureStack& stack, const PipelineConfig& config,
                                   std::size_t img_h, std::size_t img_w) {
  config.validate();
  if (img_h == 0 || img_w == 0) throw ArgumentError("image size must be >= 1x1");
  LocalizationResult r;
  r.transactions = build_transactions(stack);
  r.frequencies = item_frequencies(r.transactions);
  const auto marked = select_frequent_positions(r.frequencies, config.alpha);
  r.components = connected_components(marked, config.connectivity);
  r.grid_map = build_support_map(r.frequencies, r.components, config.keep);
  r.image_map = upsample_support(r.grid_map, img_h, img_w);
  if (config.keep == KeepMode::Largest) {
    if (auto box = extract_box_single(r.image_map, config.connectivity)) r.boxes.push_back(*box);
  } else {
    r.boxes = extract_boxes_multi(r.image_map, config.max_boxes, config.connectivity);
  }
  return r;
}

inline Grid<std::uint8_t> saliency_map(const LocalizationResult& result) {
  return normalize_saliency(result.image_map.values);
}

/// Part locations on the localized object. Throws InfeasibleError when the
/// support map has fewer than K nonzero pixels.
inline std::vector<PartSpec> localize_parts(const LocalizationResult& result,
                                            const PipelineConfig& config,
                                            const KMeansOptions& options = {}) {
  config.validate();
  auto box = extract_box_single(result.image_map, config.connectivity);
  if (!box) throw InfeasibleError("no object found; cannot place parts");
  return locate_parts(result.image_map, *box, config.parts_k, config.lambda, config.seed, options);
}

}  // namespace olm
