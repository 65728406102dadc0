#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace vimf {

/// Runs fn(begin, end, chunk_index) over [0, total) in fixed-size chunks.
/// Chunk boundaries depend only on `total` and `chunk_size`, never on the
/// worker count, so per-chunk outputs combined in chunk order are
/// bit-identical for every `threads` value.
void parallel_for_chunks(
    std::size_t total, std::size_t chunk_size, int threads,
    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

/// Deterministic chunked sum of term(i) for i in [0, total). Partial sums are
/// accumulated sequentially within each chunk and reduced in chunk order.
double parallel_sum(std::size_t total, std::size_t chunk_size, int threads,
                    const std::function<double(std::size_t)>& term);

}  // namespace vimf
