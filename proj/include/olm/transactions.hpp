#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "olm/errors.hpp"
#include "olm/tensor_store.hpp"

namespace olm {

using ItemId = std::uint32_t;
using Transaction = std::vector<ItemId>;

/// N transactions over the items of a grid_h x grid_w grid.
/// Item id of grid position (y, x) is y * grid_w + x.
struct TransactionDatabase {
  std::size_t grid_h = 0;
  std::size_t grid_w = 0;
  std::vector<Transaction> transactions;

  std::size_t item_universe_size() const noexcept { return grid_h * grid_w; }
  std::size_t size() const noexcept { return transactions.size(); }

  // Throws ValidationError unless every transaction is strictly ascending
  // and within the item universe.
  void validate() const {
    const std::size_t universe = item_universe_size();
    for (std::size_t t = 0; t < transactions.size(); ++t) {
      const auto& tr = transactions[t];
      for (std::size_t i = 0; i < tr.size(); ++i) {
        if (tr[i] >= universe) {
          throw ValidationError("transaction " + std::to_string(t) + ": item " +
                                std::to_string(tr[i]) + " outside universe of " +
                                std::to_string(universe));
        }
        if (i > 0 && tr[i - 1] >= tr[i]) {
          throw ValidationError("transaction " + std::to_string(t) +
                                " is not strictly ascending");
        }
      }
    }
  }

  friend bool operator==(const TransactionDatabase&, const TransactionDatabase&) = default;
};

/// Mean of the strictly positive values of one channel, or nullopt when the
/// channel has no positive value.
inline std::optional<double> channel_threshold(std::span<const float> channel) {
  double sum = 0.0;
  std::size_t count = 0;
  for (float v : channel) {
    if (v > 0.0f) {
      sum += v;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

// Positions whose value is strictly above the channel threshold, ascending.
inline Transaction channel_transaction(std::span<const float> channel) {
  Transaction items;
  const auto beta = channel_threshold(channel);
  if (!beta) return items;
  for (std::size_t p = 0; p < channel.size(); ++p) {
    if (static_cast<double>(channel[p]) > *beta) items.push_back(static_cast<ItemId>(p));
  }
  return items;
}

/// One transaction per channel, in channel order. Channels without any
/// above-threshold position contribute an empty transaction so N == C.
inline TransactionDatabase build_transactions(const FeatureStack& stack) {
  TransactionDatabase db;
  db.grid_h = stack.height();
  db.grid_w = stack.width();
  db.transactions.reserve(stack.channels());
  for (std::size_t c = 0; c < stack.channels(); ++c) {
    db.transactions.push_back(channel_transaction(stack.channel(c)));
  }
  return db;
}

}  // namespace olm
