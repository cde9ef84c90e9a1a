#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "olm/errors.hpp"
#include "olm/grid.hpp"
#include "olm/transactions.hpp"

namespace olm {

struct FrequentItemset {
  std::vector<ItemId> items;
  std::size_t support_count = 0;
  double support_ratio = 0.0;

  friend bool operator==(const FrequentItemset&, const FrequentItemset&) = default;
};

/// Per-position occurrence counts over all transactions of a database.
struct FrequencyGrid {
  std::size_t n_transactions = 0;
  Grid<std::uint32_t> counts;

  std::size_t rows() const noexcept { return counts.rows(); }
  std::size_t cols() const noexcept { return counts.cols(); }

  double ratio(std::size_t p) const {
    return n_transactions == 0
               ? 0.0
               : static_cast<double>(counts[p]) / static_cast<double>(n_transactions);
  }
  double ratio(std::size_t r, std::size_t c) const { return ratio(r * cols() + c); }

  Grid<double> ratios() const {
    Grid<double> g(rows(), cols());
    for (std::size_t p = 0; p < counts.size(); ++p) g[p] = ratio(p);
    return g;
  }
};

// Frequency test shared by the miner and the position selector.
inline bool meets_support(std::size_t count, std::size_t n, double alpha) {
  return n > 0 && static_cast<double>(count) / static_cast<double>(n) >= alpha;
}

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ArgumentError("min support alpha must lie in (0, 1], got " + std::to_string(alpha));
  }
}

/// Fraction of transactions containing every item of `itemset`.
/// The empty itemset is contained in every transaction.
inline double support(const TransactionDatabase& db, std::vector<ItemId> itemset) {
  for (ItemId id : itemset) {
    if (id >= db.item_universe_size()) {
      throw ArgumentError("item id " + std::to_string(id) + " outside universe of " +
                          std::to_string(db.item_universe_size()));
    }
  }
  if (db.size() == 0) return 0.0;
  std::sort(itemset.begin(), itemset.end());
  itemset.erase(std::unique(itemset.begin(), itemset.end()), itemset.end());
  std::size_t hits = 0;
  for (const auto& tr : db.transactions) {
    if (std::includes(tr.begin(), tr.end(), itemset.begin(), itemset.end())) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(db.size());
}

inline FrequencyGrid item_frequencies(const TransactionDatabase& db) {
  FrequencyGrid grid{db.size(), Grid<std::uint32_t>(db.grid_h, db.grid_w, 0u)};
  const std::size_t universe = db.item_universe_size();
  for (const auto& tr : db.transactions) {
    for (ItemId id : tr) {
      if (id >= universe) throw ArgumentError("item id outside universe");
      ++grid.counts[id];
    }
  }
  return grid;
}

namespace detail {

// Set of transaction indices, one bit per transaction.
class TidSet {
 public:
  explicit TidSet(std::size_t n) : words_((n + 63) / 64, 0) {}

  void set(std::size_t t) { words_[t / 64] |= std::uint64_t{1} << (t % 64); }

  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }

  TidSet operator&(const TidSet& other) const {
    TidSet r(*this);
    for (std::size_t i = 0; i < words_.size(); ++i) r.words_[i] &= other.words_[i];
    return r;
  }

 private:
  std::vector<std::uint64_t> words_;
};

struct Level {
  std::vector<std::vector<ItemId>> itemsets;  // lexicographically sorted
  std::vector<TidSet> tids;
  std::vector<std::size_t> counts;
};

// True when every (k-1)-subset of `candidate` obtained by dropping one of
// its first k-2 items is in `prev`. The two subsets that drop the last or
// second-to-last item are the join parents and are frequent by construction.
inline bool all_subsets_frequent(const std::vector<ItemId>& candidate,
                                 const std::vector<std::vector<ItemId>>& prev) {
  std::vector<ItemId> subset(candidate.size() - 1);
  for (std::size_t skip = 0; skip + 2 < candidate.size(); ++skip) {
    std::size_t j = 0;
    for (std::size_t i = 0; i < candidate.size(); ++i) {
      if (i != skip) subset[j++] = candidate[i];
    }
    if (!std::binary_search(prev.begin(), prev.end(), subset)) return false;
  }
  return true;
}

}  // namespace detail

/// Apriori: level-wise mining of every itemset with support ratio >= alpha.
///
/// Level k candidates come from joining pairs of frequent (k-1)-itemsets that
/// share their first k-2 items, then pruning any candidate with an infrequent
/// (k-1)-subset. Supports are counted exactly on per-itemset transaction
/// bitsets. Output is ordered by size, then lexicographically.
inline std::vector<FrequentItemset> mine_frequent(const TransactionDatabase& db, double alpha,
                                                  std::optional<std::size_t> max_len = {}) {
  check_alpha(alpha);
  std::vector<FrequentItemset> result;
  const std::size_t n = db.size();
  if (n == 0 || (max_len && *max_len == 0)) return result;

  const std::size_t universe = db.item_universe_size();
  std::vector<detail::TidSet> item_tids(universe, detail::TidSet(n));
  std::vector<std::size_t> item_counts(universe, 0);
  for (std::size_t t = 0; t < n; ++t) {
    for (ItemId id : db.transactions[t]) {
      if (id >= universe) throw ArgumentError("item id outside universe");
      item_tids[id].set(t);
      ++item_counts[id];
    }
  }

  auto emit = [&](const detail::Level& level) {
    for (std::size_t i = 0; i < level.itemsets.size(); ++i) {
      result.push_back({level.itemsets[i], level.counts[i],
                        static_cast<double>(level.counts[i]) / static_cast<double>(n)});
    }
  };

  detail::Level level;
  for (std::size_t id = 0; id < universe; ++id) {
    if (meets_support(item_counts[id], n, alpha)) {
      level.itemsets.push_back({static_cast<ItemId>(id)});
      level.tids.push_back(std::move(item_tids[id]));
      level.counts.push_back(item_counts[id]);
    }
  }
  emit(level);

  for (std::size_t k = 2; !level.itemsets.empty() && (!max_len || k <= *max_len); ++k) {
    detail::Level next;
    const auto& sets = level.itemsets;
    std::size_t block_start = 0;
    while (block_start < sets.size()) {
      // [block_start, block_end) share the same (k-2)-prefix.
      std::size_t block_end = block_start + 1;
      while (block_end < sets.size() &&
             std::equal(sets[block_start].begin(), sets[block_start].end() - 1,
                        sets[block_end].begin())) {
        ++block_end;
      }
      for (std::size_t a = block_start; a < block_end; ++a) {
        for (std::size_t b = a + 1; b < block_end; ++b) {
          std::vector<ItemId> candidate = sets[a];
          candidate.push_back(sets[b].back());
          if (!detail::all_subsets_frequent(candidate, sets)) continue;
          auto tids = level.tids[a] & level.tids[b];
          const std::size_t count = tids.count();
          if (meets_support(count, n, alpha)) {
            next.itemsets.push_back(std::move(candidate));
            next.tids.push_back(std::move(tids));
            next.counts.push_back(count);
          }
        }
      }
      block_start = block_end;
    }
    emit(next);
    level = std::move(next);
  }
  return result;
}

/// Plain-text transactions: one transaction per line, whitespace-separated
/// non-negative integer ids. Blank lines are empty transactions. The result
/// is a 1 x (max_id + 1) grid.
inline TransactionDatabase parse_transactions(std::istream& in) {
  TransactionDatabase db;
  std::string line;
  std::size_t line_no = 0;
  ItemId max_id = 0;
  bool any = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream tokens(line);
    Transaction tr;
    std::string tok;
    while (tokens >> tok) {
      std::size_t used = 0;
      unsigned long long v = 0;
      try {
        if (tok.front() == '-' || tok.front() == '+') throw std::invalid_argument(tok);
        v = std::stoull(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || v > 0xFFFFFFFEull) {
        throw FormatError("line " + std::to_string(line_no) + ": invalid item id '" + tok + "'");
      }
      tr.push_back(static_cast<ItemId>(v));
      max_id = std::max(max_id, static_cast<ItemId>(v));
      any = true;
    }
    std::sort(tr.begin(), tr.end());
    tr.erase(std::unique(tr.begin(), tr.end()), tr.end());
    db.transactions.push_back(std::move(tr));
  }
  db.grid_h = 1;
  db.grid_w = any ? static_cast<std::size_t>(max_id) + 1 : 0;
  return db;
}

}  // namespace olm
