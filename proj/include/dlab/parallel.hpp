// Minimal deterministic fork-join helper. The worker count comes from the
// DLAB_THREADS environment variable (default: hardware concurrency).

#pragma once

#include <cstddef>
#include <functional>

namespace dlab {

int thread_count();

/// Splits [0, n) into contiguous chunks, one per worker, and calls
/// fn(chunk, begin, end). Chunks are numbered in index order, so results
/// stored per chunk can be merged deterministically.
void parallel_chunks(std::size_t n, const std::function<void(int, std::size_t, std::size_t)>& fn);

/// Number of chunks parallel_chunks will use for n items.
int chunk_count(std::size_t n);

}  // namespace dlab
