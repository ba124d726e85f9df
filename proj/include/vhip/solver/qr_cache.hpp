#pragma once

#include "vhip/solver/structured.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace vhip {

struct CachedFactor {
  std::vector<FreeGroup> groups;
  std::vector<ReducedColumn> columns;
  StructuredQR qr;
};

/// Factorizations of J_W for every working set except the full one, keyed by bitmask.
/// Immutable once built, shareable across solver instances.
class QrCache {
 public:
  static constexpr int kMaxN = 20;

  QrCache(int n, const Partition& partition) : n_(n), partition_(partition) {
    if (n != partition.n()) throw std::invalid_argument("QrCache: partition size mismatch");
    if (n < 2 || n > kMaxN) throw std::invalid_argument("QrCache: n outside [2, 20]");
    const std::uint64_t count = (std::uint64_t{1} << (n + 1)) - 1;
    entries_.resize(count);
    for (std::uint64_t mask = 0; mask < count; ++mask) entries_[mask] = factor(mask);
  }

  [[nodiscard]] int n() const { return n_; }
  [[nodiscard]] const Partition& partition() const { return partition_; }
  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] const CachedFactor& at(std::uint64_t mask) const { return entries_.at(mask); }

  [[nodiscard]] CachedFactor factor(std::uint64_t mask) const {
    CachedFactor f;
    f.groups = free_groups(ActiveSetDescriptor::from_mask(n_, mask));
    f.columns = reduced_cost_columns(f.groups, partition_);
    f.qr = structured_qr(f.columns, n_ - 1);
    return f;
  }

  /// True when the partition matches the one the cache was built for.
  [[nodiscard]] bool matches(const Partition& p) const {
    return p.n() == n_ && p.s == partition_.s;
  }

 private:
  int n_;
  Partition partition_;
  std::vector<CachedFactor> entries_;
};

}  // namespace vhip
