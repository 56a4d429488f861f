#pragma once

#include <cstddef>
#include <functional>

namespace ctis {

/// Caps the worker threads used by the library kernels. 0 restores the default
/// (hardware concurrency).
void set_thread_count(std::size_t threads);
[[nodiscard]] std::size_t thread_count();

/// Splits [0, n) into at most thread_count() contiguous chunks and runs
/// `body(begin, end, chunk)` on each. Chunk boundaries depend only on `n` and
/// the chunk count, so per-chunk partial results can be merged in a fixed order.
/// Chunks hold at least `min_chunk` items.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 256);

/// Number of chunks parallel_for will use for a range of size n.
[[nodiscard]] std::size_t chunk_count(std::size_t n, std::size_t min_chunk = 256);

}  // namespace ctis
