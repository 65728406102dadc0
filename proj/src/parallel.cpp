#include "vimf/parallel.hpp"

#include <atomic>
#include <thread>

namespace vimf {

void parallel_for_chunks(
    std::size_t total, std::size_t chunk_size, int threads,
    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  if (total == 0) return;
  if (chunk_size == 0) chunk_size = 1;
  const std::size_t n_chunks = (total + chunk_size - 1) / chunk_size;

  auto run_chunk = [&](std::size_t ci) {
    const std::size_t begin = ci * chunk_size;
    const std::size_t end = begin + chunk_size < total ? begin + chunk_size : total;
    fn(begin, end, ci);
  };

  if (threads <= 1 || n_chunks == 1) {
    for (std::size_t ci = 0; ci < n_chunks; ++ci) run_chunk(ci);
    return;
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t ci = next.fetch_add(1);
      if (ci >= n_chunks) break;
      run_chunk(ci);
    }
  };

  std::size_t n_workers = static_cast<std::size_t>(threads);
  if (n_workers > n_chunks) n_workers = n_chunks;
  std::vector<std::thread> pool;
  pool.reserve(n_workers - 1);
  for (std::size_t t = 1; t < n_workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

double parallel_sum(std::size_t total, std::size_t chunk_size, int threads,
                    const std::function<double(std::size_t)>& term) {
  if (total == 0) return 0.0;
  if (chunk_size == 0) chunk_size = 1;
  const std::size_t n_chunks = (total + chunk_size - 1) / chunk_size;
  std::vector<double> partial(n_chunks, 0.0);
  parallel_for_chunks(total, chunk_size, threads,
                      [&](std::size_t begin, std::size_t end, std::size_t ci) {
                        double s = 0.0;
                        for (std::size_t i = begin; i < end; ++i) s += term(i);
                        partial[ci] = s;
                      });
  double sum = 0.0;
  for (double p : partial) sum += p;  // fixed order
  return sum;
}

}  // namespace vimf
