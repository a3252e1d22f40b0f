#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace ruq::detail {

// Chunked parallel loop over [begin, end). Each index is visited exactly
// once and callers write only to their own slots, so the result is
// independent of the thread count.
inline void parallel_for(std::size_t begin, std::size_t end, unsigned threads,
                         const std::function<void(std::size_t)>& body) {
  const std::size_t n = end > begin ? end - begin : 0;
  if (threads <= 1 || n < 2 * threads) {
    for (std::size_t i = begin; i < end; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t lo = begin + t * chunk;
    const std::size_t hi = lo + chunk < end ? lo + chunk : end;
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace ruq::detail
