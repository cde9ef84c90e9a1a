// Acceptance suite: one PASS/FAIL line per criterion; exit status is the
// number of failed criteria. Everything runs on synthetic fixtures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <unistd.h>

#include "olm/cli.hpp"
#include "olm/itemset_miner.hpp"
#include "olm/localization.hpp"
#include "olm/metrics.hpp"
#include "olm/parts.hpp"
#include "olm/tensor_store.hpp"
#include "olm/transactions.hpp"
#include "oracles.hpp"
#include "planted.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double unit_value(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// -- Apriori ---------------------------------------------------------------

Outcome apriori_oracle_equivalence() {
  constexpr int kDatabases = 200;
  constexpr double kBudgetSeconds = 60.0;
  std::mt19937_64 rng(20240601);
  const auto start = Clock::now();
  int mismatches = 0;
  std::size_t itemsets = 0;
  for (int trial = 0; trial < kDatabases; ++trial) {
    const std::size_t items = 1 + rng() % 12;
    const std::size_t txs = 1 + rng() % 50;
    const double density = 0.1 + 0.8 * static_cast<double>(rng() % 1000) / 1000.0;
    olm::TransactionDatabase db{1, items, {}};
    for (std::size_t t = 0; t < txs; ++t) {
      olm::Transaction tr;
      for (std::size_t i = 0; i < items; ++i) {
        if (static_cast<double>(rng() % 1000) / 1000.0 < density) tr.push_back(static_cast<olm::ItemId>(i));
      }
      db.transactions.push_back(std::move(tr));
    }
    const double alpha = static_cast<double>(1 + rng() % 9) / 10.0;
    const auto mined = olm::mine_frequent(db, alpha);
    const auto expected = olm::oracle::exhaustive_itemsets(db, alpha);
    itemsets += mined.size();
    if (mined != expected) ++mismatches;
  }
  const double elapsed = seconds_since(start);
  std::ostringstream d;
  d << kDatabases << " databases, " << itemsets << " itemsets, " << mismatches << " mismatches, "
    << elapsed << " s (limit " << kBudgetSeconds << " s)";
  return {mismatches == 0 && elapsed < kBudgetSeconds, d.str()};
}

// -- Planted blob end to end ------------------------------------------------

// Tight box of the nonzero region of the planted rectangle's indicator grid
// after the same bilinear upsampling the pipeline applies to support maps.
olm::BoundingBox upsampled_reference(const olm::synthetic::PlantedScene& scene, std::size_t h,
                                     std::size_t w) {
  const olm::SupportMap indicator{scene.indicator(), olm::MapScale::Grid, false};
  return *olm::extract_box_single(olm::upsample_support(indicator, h, w));
}

// Grid cells scaled by the stride, without any interpolation support.
olm::BoundingBox stride_reference(const olm::synthetic::PlantedScene& scene, int stride) {
  return {static_cast<int>(scene.col0) * stride, static_cast<int>(scene.row0) * stride,
          static_cast<int>(scene.col1 + 1) * stride - 1, static_cast<int>(scene.row1 + 1) * stride - 1, 0};
}

Outcome planted_blob_end_to_end() {
  constexpr int kTrials = 100;
  constexpr int kRequired = 95;
  constexpr double kMinIou = 0.9;
  constexpr double kBudgetSeconds = 120.0;
  constexpr std::size_t kImage = 448;

  const fs::path dir = fs::temp_directory_path() / ("olm_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const auto start = Clock::now();
  int hits = 0;
  int errors = 0;
  double worst = 1.0;
  double stride_sum = 0.0;
  int stride_hits = 0;
  for (int trial = 0; trial < kTrials; ++trial) {
    const auto scene = olm::synthetic::make_planted_scene(static_cast<std::uint64_t>(trial));
    const auto path = dir / ("trial" + std::to_string(trial) + ".olmf");
    const std::vector<olm::FeatureStack> stacks{scene.stack};
    olm::write_olmf(stacks, path);

    std::ostringstream out, err;
    const int code = olm::cli::run({"localize", "--features", path.string(), "--alpha", "0.05",
                                    "--size", "448x448"},
                                   out, err);
    fs::remove(path);
    if (code != 0) {
      ++errors;
      worst = 0.0;
      continue;
    }
    const auto record = olm::box_record_from_json(olm::json::parse(out.str()));
    if (record.boxes.empty()) {
      worst = 0.0;
      continue;
    }
    const double iou = olm::iou(record.boxes.front(), upsampled_reference(scene, kImage, kImage));
    worst = std::min(worst, iou);
    if (iou >= kMinIou) ++hits;
    const double stride_iou = olm::iou(record.boxes.front(), stride_reference(scene, 16));
    stride_sum += stride_iou;
    if (stride_iou >= kMinIou) ++stride_hits;
  }
  fs::remove_all(dir);
  const double elapsed = seconds_since(start);
  std::ostringstream d;
  d << hits << "/" << kTrials << " trials with IoU >= " << kMinIou << " (need " << kRequired
    << "), worst IoU " << worst << ", " << errors << " CLI errors, " << elapsed << " s (limit "
    << kBudgetSeconds << " s); info: vs stride-scaled cells without interpolation support "
    << stride_hits << "/" << kTrials << " >= " << kMinIou << ", mean IoU " << stride_sum / kTrials;
  return {hits >= kRequired && elapsed < kBudgetSeconds, d.str()};
}

// -- Transactions ----------------------------------------------------------

Outcome transaction_invariants() {
  constexpr int kStacks = 50;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> value(0.0, 10.0);
  std::uniform_real_distribution<double> log_scale(-4.0, 4.0);
  int violations = 0;
  int scale_changes = 0;
  std::size_t checked = 0;
  for (int s = 0; s < kStacks; ++s) {
    const std::size_t c = 1 + rng() % 64;
    const std::size_t h = 1 + rng() % 16;
    const std::size_t w = 1 + rng() % 16;
    const double zero_rate = static_cast<double>(rng() % 90) / 100.0;
    std::vector<float> data(c * h * w);
    for (auto& v : data) {
      v = static_cast<double>(rng() % 1000) / 1000.0 < zero_rate ? 0.0f : static_cast<float>(value(rng));
    }
    const olm::FeatureStack stack("x", c, h, w, data);
    const auto db = olm::build_transactions(stack);
    if (db.size() != c) ++violations;
    for (std::size_t k = 0; k < c; ++k) {
      const auto ch = stack.channel(k);
      double sum = 0.0;
      std::size_t pos = 0;
      for (float v : ch) {
        if (v > 0.0f) {
          sum += v;
          ++pos;
        }
      }
      for (std::size_t p = 0; p < ch.size(); ++p) {
        const bool item = std::binary_search(db.transactions[k].begin(), db.transactions[k].end(),
                                             static_cast<olm::ItemId>(p));
        const bool above = pos > 0 && ch[p] > sum / static_cast<double>(pos);
        if (item != above) ++violations;
        ++checked;
      }
    }

    std::vector<float> scaled = data;
    for (std::size_t k = 0; k < c; ++k) {
      const double factor = std::exp2(log_scale(rng));
      for (std::size_t p = 0; p < h * w; ++p) {
        scaled[k * h * w + p] = static_cast<float>(scaled[k * h * w + p] * factor);
      }
    }
    if (!(olm::build_transactions(olm::FeatureStack("x", c, h, w, scaled)) == db)) ++scale_changes;
  }
  std::ostringstream d;
  d << kStacks << " random stacks, " << checked << " positions checked, " << violations
    << " threshold violations, " << scale_changes << " stacks changed by per-channel rescaling";
  return {violations == 0 && scale_changes == 0, d.str()};
}

// -- Connected components --------------------------------------------------

Outcome connected_components_oracle() {
  constexpr int kMasks = 1000;
  std::mt19937_64 rng(4242);
  int mismatches = 0;
  std::size_t components = 0;
  for (int m = 0; m < kMasks; ++m) {
    olm::BinaryGrid mask(16, 16, 0);
    const auto density = static_cast<double>(rng() % 100) / 100.0;
    for (auto& v : mask) v = static_cast<double>(rng() % 1000) / 1000.0 < density ? 1 : 0;
    for (int conn : {4, 8}) {
      const auto comps = olm::connected_components(mask, static_cast<olm::Connectivity>(conn));
      components += comps.size();
      const std::set<std::vector<std::size_t>> got(comps.begin(), comps.end());
      if (got.size() != comps.size() || got != olm::oracle::flood_fill_partition(mask, conn)) {
        ++mismatches;
      }
    }
  }
  std::ostringstream d;
  d << kMasks << " masks x {4,8}, " << components << " components, " << mismatches << " mismatches";
  return {mismatches == 0, d.str()};
}

// -- Metrics ---------------------------------------------------------------

Outcome metric_oracles() {
  std::mt19937_64 rng(99);
  std::ostringstream d;
  bool ok = true;

  int iou_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    auto box = [&] {
      const int x0 = static_cast<int>(rng() % 64), x1 = static_cast<int>(rng() % 64);
      const int y0 = static_cast<int>(rng() % 64), y1 = static_cast<int>(rng() % 64);
      return olm::BoundingBox{std::min(x0, x1), std::min(y0, y1), std::max(x0, x1), std::max(y0, y1), 0};
    };
    const auto a = box(), b = box();
    if (olm::iou(a, b) != olm::oracle::pixel_count_iou(a, b) || olm::iou(a, b) != olm::iou(b, a)) ++iou_bad;
  }
  d << "iou " << iou_bad << "/1000 mismatches; ";
  ok &= iou_bad == 0;

  int f_bad = 0;
  for (int i = 0; i < 300; ++i) {
    const std::size_t h = 1 + rng() % 20, w = 1 + rng() % 20;
    olm::Grid<std::uint8_t> sal(h, w), gt(h, w, 0);
    const int levels = 1 + static_cast<int>(rng() % 256);
    for (auto& v : sal) v = static_cast<std::uint8_t>(rng() % static_cast<unsigned>(levels));
    for (auto& v : gt) v = rng() % 3 == 0;
    gt[rng() % gt.size()] = 1;
    const auto fast = olm::max_f_measure(sal, gt);
    const auto slow = olm::oracle::brute_max_f(sal, gt);
    if (fast.f != slow.f || fast.threshold != slow.threshold) ++f_bad;
  }
  d << "max-F " << f_bad << "/300 mismatches; ";
  ok &= f_bad == 0;

  int mae_bad = 0;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    olm::Grid<double> s(9, 7), sc(9, 7);
    olm::Grid<std::uint8_t> g(9, 7), gc(9, 7);
    for (std::size_t p = 0; p < s.size(); ++p) {
      s[p] = unit(rng);
      sc[p] = 1.0 - s[p];
      g[p] = rng() % 2;
      gc[p] = 1 - g[p];
    }
    if (std::abs(olm::mae(s, g) - olm::mae(sc, gc)) > 1e-12) ++mae_bad;
  }
  d << "mae symmetry " << mae_bad << "/200 violations; ";
  ok &= mae_bad == 0;

  int fp_bad = 0;
  for (int i = 1; i <= 10; ++i) {
    const double p = i / 10.0;
    if (std::abs(olm::f_measure(p, p) - p) > 1e-12) ++fp_bad;
  }
  d << "F(p,p)=p " << fp_bad << "/10 violations; ";
  ok &= fp_bad == 0;

  olm::EvalRecord half;
  half.predicted = {{0, 0, 9, 9, 0}};
  half.ground_truth = {{0, 0, 9, 19, 0}};
  const bool exact_half = olm::iou(half.predicted[0], half.ground_truth[0]) == 0.5;
  const bool strict = olm::corloc(std::vector{half}) == 0.0;
  d << "IoU=0.5 counted " << (strict ? "incorrect" : "correct");
  ok &= exact_half && strict;
  return {ok, d.str()};
}

// -- k-means and part geometry ---------------------------------------------

Outcome kmeans_and_part_geometry() {
  constexpr int kInputs = 100;
  std::mt19937_64 rng(555);
  int increases = 0;
  int irreproducible = 0;
  std::size_t iterations = 0;
  for (int i = 0; i < kInputs; ++i) {
    const std::size_t n = 20 + rng() % 400;
    const std::size_t k = 1 + rng() % 8;
    std::uniform_real_distribution<double> coord(0.0, 448.0);
    std::vector<olm::Point3> pts(n);
    for (auto& p : pts) p = {std::floor(coord(rng)), std::floor(coord(rng)), unit_value(rng)};
    const std::uint64_t seed = rng();
    const auto a = olm::kmeans(pts, k, seed);
    const auto b = olm::kmeans(pts, k, seed);
    iterations += a.iterations;
    if (a.centroids != b.centroids || a.assignment != b.assignment) ++irreproducible;
    for (std::size_t t = 1; t < a.objective_history.size(); ++t) {
      if (a.objective_history[t] > a.objective_history[t - 1]) ++increases;
    }
  }

  const bool side_ok = olm::part_side_length({0, 0, 99, 79, 0}, 0.25) == 20.0;
  int mask_bad = 0;
  for (int i = 0; i < 100; ++i) {
    const olm::PixelCenter c{static_cast<int>(rng() % 40), static_cast<int>(rng() % 30)};
    const double l = 0.5 + static_cast<double>(rng() % 400) / 10.0;
    const auto mask = olm::part_mask(c, l, 30, 40);
    for (int y = 0; y < 30; ++y) {
      for (int x = 0; x < 40; ++x) {
        const bool inside = std::abs(x - c.x) <= l / 2 && std::abs(y - c.y) <= l / 2;
        if ((mask(y, x) == 1) != inside) ++mask_bad;
      }
    }
  }
  std::ostringstream d;
  d << kInputs << " inputs, " << iterations << " iterations, " << increases
    << " objective increases, " << irreproducible << " irreproducible runs; l(0.25,100x80)="
    << olm::part_side_length({0, 0, 99, 79, 0}, 0.25) << "; " << mask_bad << " mask pixels off";
  return {increases == 0 && irreproducible == 0 && side_ok && mask_bad == 0, d.str()};
}

// -- Tensor store ----------------------------------------------------------

Outcome olmf_and_resize() {
  std::mt19937_64 rng(31337);
  std::vector<olm::FeatureStack> stacks;
  for (int t = 0; t < 5; ++t) {
    const std::size_t c = 1 + rng() % 8, h = 1 + rng() % 12, w = 1 + rng() % 12;
    std::vector<float> data(c * h * w);
    // Raw bit patterns of finite non-negative floats, subnormals included.
    for (auto& v : data) {
      std::uint32_t bits;
      do {
        bits = static_cast<std::uint32_t>(rng()) & 0x7FFFFFFFu;
      } while ((bits & 0x7F800000u) == 0x7F800000u);
      v = std::bit_cast<float>(bits);
    }
    stacks.emplace_back("t" + std::to_string(t), c, h, w, std::move(data));
  }
  const auto bytes = olm::encode_olmf(stacks);
  const auto decoded = olm::decode_olmf(bytes);
  bool bitwise = decoded.size() == stacks.size();
  for (std::size_t t = 0; bitwise && t < stacks.size(); ++t) {
    const auto a = stacks[t].data(), b = decoded[t].data();
    bitwise = a.size() == b.size() &&
              std::equal(a.begin(), a.end(), b.begin(), [](float x, float y) {
                return std::bit_cast<std::uint32_t>(x) == std::bit_cast<std::uint32_t>(y);
              });
  }
  bitwise = bitwise && olm::encode_olmf(decoded) == bytes;

  int constant_bad = 0;
  int range_bad = 0;
  std::uniform_real_distribution<float> val(0.0f, 50.0f);
  for (int i = 0; i < 100; ++i) {
    const std::size_t h = 1 + rng() % 20, w = 1 + rng() % 20;
    const std::size_t th = 1 + rng() % 64, tw = 1 + rng() % 64;
    const float k = val(rng);
    const olm::FeatureStack flat("c", 1, h, w, std::vector<float>(h * w, k));
    const auto flat_resized = olm::resize_bilinear(flat, th, tw);
    for (float v : flat_resized.data()) {
      if (std::abs(v - k) > 1e-6f) ++constant_bad;
    }
    std::vector<float> data(h * w);
    for (auto& v : data) v = val(rng);
    const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
    const float mn = *lo, mx = *hi;
    const olm::FeatureStack random("r", 1, h, w, std::move(data));
    const auto random_resized = olm::resize_bilinear(random, th, tw);
    for (float v : random_resized.data()) {
      if (v < mn || v > mx) ++range_bad;
    }
  }
  std::ostringstream d;
  d << "round-trip " << (bitwise ? "bitwise identical" : "MISMATCH") << " over " << bytes.size()
    << " bytes; constant deviations > 1e-6: " << constant_bad << "; out-of-range values: " << range_bad;
  return {bitwise && constant_bad == 0 && range_bad == 0, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"apriori-oracle-equivalence", apriori_oracle_equivalence},
      {"planted-blob-end-to-end", planted_blob_end_to_end},
      {"transaction-invariants", transaction_invariants},
      {"connected-components-oracle", connected_components_oracle},
      {"metric-oracles", metric_oracles},
      {"kmeans-and-part-geometry", kmeans_and_part_geometry},
      {"olmf-roundtrip-and-resize", olmf_and_resize},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed;
}
