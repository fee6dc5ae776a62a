#pragma once
#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace pinnafe {

// Static block partition of [0, n) across a fixed thread count.
// Each worker sees a contiguous index range; callers that reduce must keep
// one partial accumulator per block and combine the blocks in block order,
// so results are bit-identical for a fixed (n, threads) pair regardless of
// scheduling.  threads <= 1 runs inline.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t, std::size_t, int)>& body) {
  if (n == 0) return;
  int t = std::max(1, threads);
  t = int(std::min<std::size_t>(std::size_t(t), n));
  if (t == 1) {
    body(0, n, 0);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(std::size_t(t));
  std::size_t chunk = (n + std::size_t(t) - 1) / std::size_t(t);
  for (int k = 0; k < t; ++k) {
    std::size_t lo = std::size_t(k) * chunk;
    std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi, k] { body(lo, hi, k); });
  }
  for (auto& th : pool) th.join();
}

// Compensated (Neumaier) summation in fixed index order.  Used wherever an
// invariant depends on a sum being accurate to a few ulps (e.g. weight
// normalization).
inline double stable_sum(const double* v, std::size_t n) {
  double s = 0.0, c = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double t = s + v[i];
    if (std::abs(s) >= std::abs(v[i]))
      c += (s - t) + v[i];
    else
      c += (v[i] - t) + s;
    s = t;
  }
  return s + c;
}

}  // namespace pinnafe
