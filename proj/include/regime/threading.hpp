#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace regime {

inline int default_threads() {
  if (const char* env = std::getenv("REGIME_PRICE_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

// Runs fn(chunk_index, begin, end) over [0, n) split into fixed-size chunks.
// Chunk boundaries depend only on (n, chunk_size), never on the thread
// count, so any reduction indexed by chunk_index is reproducible.
inline void parallel_chunks(long n, long chunk_size, int threads,
                            const std::function<void(long, long, long)>& fn) {
  if (n <= 0) return;
  const long num_chunks = (n + chunk_size - 1) / chunk_size;
  if (threads <= 1 || num_chunks == 1) {
    for (long c = 0; c < num_chunks; ++c)
      fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
    return;
  }
  std::atomic<long> next{0};
  auto worker = [&] {
    for (;;) {
      long c = next.fetch_add(1);
      if (c >= num_chunks) return;
      fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
    }
  };
  std::vector<std::thread> pool;
  int nthreads = std::min<long>(threads, num_chunks);
  pool.reserve(nthreads);
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace regime
