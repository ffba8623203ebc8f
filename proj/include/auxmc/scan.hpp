#ifndef AUXMC_SCAN_HPP
#define AUXMC_SCAN_HPP

#include <algorithm>
#include <vector>

#include "auxmc/parallel.hpp"

namespace auxmc::scan {

struct ScanStats {
  int critical_path = 0;   // longest chain of combine applications
  long applications = 0;   // total combine count
};

// In-place inclusive prefix scan: a[j] <- op(a[0], a[1], ..., a[j]) for an
// associative op(earlier, later). Sklansky fan: the combination tree depends
// only on a.size(), every slot is written by exactly one combine per level,
// and each level only reads slots below its write range — so results are
// bit-identical for any worker count and the critical path is exactly
// ceil(log2 n).
template <class E, class Op>
ScanStats inclusive_scan(std::vector<E>& a, Op op, int workers) {
  const long n = static_cast<long>(a.size());
  ScanStats stats;
  if (n < 2) return stats;

  std::vector<int> depth(n, 0);
  for (long stride = 1; stride < n; stride <<= 1) {
    parallel_for(n, workers, [&](long j) {
      if ((j & stride) == 0) return;  // lower half-block: pass through
      const long pivot = (j & ~(stride - 1)) - 1;
      a[j] = op(a[pivot], a[j]);
      depth[j] = std::max(depth[pivot], depth[j]) + 1;
    });
    for (long j = 0; j < n; ++j)
      if (j & stride) ++stats.applications;
  }
  stats.critical_path = *std::max_element(depth.begin(), depth.end());
  return stats;
}

// In-place inclusive suffix scan: a[j] <- op(a[j], a[j+1], ..., a[n-1]).
// Realized by reversing, scanning with the flipped op, and reversing back, so
// it inherits the fixed tree and span of inclusive_scan.
template <class E, class Op>
ScanStats suffix_scan(std::vector<E>& a, Op op, int workers) {
  std::reverse(a.begin(), a.end());
  auto flipped = [&op](const E& x, const E& y) { return op(y, x); };
  ScanStats stats = inclusive_scan(a, flipped, workers);
  std::reverse(a.begin(), a.end());
  return stats;
}

}  // namespace auxmc::scan

#endif
