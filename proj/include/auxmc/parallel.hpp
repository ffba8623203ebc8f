#ifndef AUXMC_PARALLEL_HPP
#define AUXMC_PARALLEL_HPP

#include <cstdlib>
#include <thread>
#include <vector>

namespace auxmc {

// Data-parallel loop over [0, n). Each index writes only its own slots, so
// results are bit-identical for any worker count; scheduling is static
// contiguous slabs. workers <= 1 runs inline.
template <class Fn>
void parallel_for(long n, int workers, Fn&& fn) {
  if (n <= 0) return;
  if (workers <= 1 || n == 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  int w = workers;
  if (static_cast<long>(w) > n) w = static_cast<int>(n);
  std::vector<std::thread> pool;
  pool.reserve(w - 1);
  auto run = [&fn, n, w](int k) {
    long lo = n * k / w;
    long hi = n * (k + 1) / w;
    for (long i = lo; i < hi; ++i) fn(i);
  };
  for (int k = 1; k < w; ++k) pool.emplace_back(run, k);
  run(0);
  for (auto& t : pool) t.join();
}

// Worker count from the environment (AUXMC_WORKERS), else fallback.
inline int env_workers(int fallback = 1) {
  const char* s = std::getenv("AUXMC_WORKERS");
  if (s == nullptr || *s == '\0') return fallback;
  long v = std::strtol(s, nullptr, 10);
  if (v < 1) return fallback;
  return static_cast<int>(v);
}

}  // namespace auxmc

#endif
