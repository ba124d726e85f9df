#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace vhip {

enum class Side : std::int8_t { Inactive = 0, Lower, Upper, Equal };

/// Working set over the n+1 linear constraints of a capture problem.
struct ActiveSetDescriptor {
  int n{0};
  std::vector<Side> side;  // n+1 entries

  ActiveSetDescriptor() = default;
  explicit ActiveSetDescriptor(int n_) : n(n_), side(static_cast<std::size_t>(n_ + 1), Side::Inactive) {}

  static ActiveSetDescriptor from_mask(int n, std::uint64_t mask, Side s = Side::Lower) {
    ActiveSetDescriptor w(n);
    for (int k = 0; k <= n; ++k)
      if ((mask >> k) & 1U) w.side[static_cast<std::size_t>(k)] = s;
    return w;
  }

  [[nodiscard]] bool active(int k) const { return side[static_cast<std::size_t>(k)] != Side::Inactive; }

  [[nodiscard]] int count() const {
    int c = 0;
    for (int k = 0; k <= n; ++k) c += active(k) ? 1 : 0;
    return c;
  }

  [[nodiscard]] bool all_active() const { return count() == n + 1; }

  [[nodiscard]] std::uint64_t mask() const {
    std::uint64_t m = 0;
    for (int k = 0; k <= n; ++k)
      if (active(k)) m |= std::uint64_t{1} << k;
    return m;
  }

  /// Run lengths (a_0, j_1, a_1, ..., j_p, a_p) of active and inactive constraints.
  [[nodiscard]] std::vector<int> runs() const {
    std::vector<int> r;
    bool want_active = true;
    int k = 0;
    while (k <= n) {
      int len = 0;
      while (k <= n && active(k) == want_active) {
        ++len;
        ++k;
      }
      r.push_back(len);
      want_active = !want_active;
    }
    if (want_active) r.push_back(0);  // trailing a_p = 0
    return r;
  }
};

/// Consecutive variables [first, last] sharing one nullspace coordinate.
struct FreeGroup {
  int first;
  int last;
};

/// Columns of the implicit nullspace basis N_W, one group per column.
inline std::vector<FreeGroup> free_groups(const ActiveSetDescriptor& w) {
  if (w.all_active()) throw std::invalid_argument("all constraints active: empty nullspace");
  const int n = w.n;
  int front = 0;  // variables pinned to phi_0 = 0 through constraint 0, 1, ...
  while (front < n && w.active(front)) ++front;
  int back = 0;  // variables pinned through constraint n, n-1, ...
  while (back < n && w.active(n - back)) ++back;
  std::vector<FreeGroup> groups;
  for (int k = front; k < n - back; ++k) {
    if (k > front && w.active(k))
      groups.back().last = k;
    else
      groups.push_back({k, k});
  }
  return groups;
}

}  // namespace vhip
