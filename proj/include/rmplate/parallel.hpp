#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace rmplate {

// Thread count from RMPLATE_THREADS (the only environment variable honored),
// clamped to [1, hardware_concurrency].
inline int thread_count() {
  static const int n = [] {
    const char* s = std::getenv("RMPLATE_THREADS");
    int v = 1;
    if (s) v = std::atoi(s);
    const int hw = int(std::thread::hardware_concurrency());
    if (v < 1) v = 1;
    if (hw > 0 && v > hw) v = hw;
    return v;
  }();
  return n;
}

// Map fixed index blocks with fn(begin, end) -> T and combine the partials in
// block order. The block partition depends only on n, so the result is
// bit-identical for any thread count.
template <class T, class Fn, class Combine>
T blocked_reduce(long n, T init, Fn&& fn, Combine&& comb) {
  if (n <= 0) return init;
  const long nblocks = n < 64 ? n : 64;
  const long step = (n + nblocks - 1) / nblocks;
  std::vector<T> partial(std::size_t(nblocks), init);

  const int nt = thread_count();
  if (nt <= 1 || nblocks == 1) {
    for (long b = 0; b < nblocks; ++b) {
      const long lo = b * step, hi = std::min(n, lo + step);
      if (lo < hi) partial[std::size_t(b)] = fn(lo, hi);
    }
  } else {
    // static round-robin assignment keeps the schedule irrelevant
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(nt));
    for (int t = 0; t < nt; ++t) {
      pool.emplace_back([&, t] {
        for (long b = t; b < nblocks; b += nt) {
          const long lo = b * step, hi = std::min(n, lo + step);
          if (lo < hi) partial[std::size_t(b)] = fn(lo, hi);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  T acc = init;
  for (long b = 0; b < nblocks; ++b) acc = comb(acc, partial[std::size_t(b)]);
  return acc;
}

}  // namespace rmplate
