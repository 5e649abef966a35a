#pragma once

#include <cstddef>
#include <functional>

namespace ntlgen {

// Worker cap from NTLGEN_THREADS (unset or invalid: hardware concurrency).
// A value of 1 runs every parallel region inline on the calling thread.
std::size_t max_threads();

// Splits [begin, end) into contiguous chunks of at least `min_chunk` items and
// runs `body(chunk_begin, chunk_end)` on up to max_threads() threads. Chunks
// never overlap, so kernels that write disjoint outputs per index stay
// bitwise identical for any thread count.
void parallel_for(std::size_t begin, std::size_t end, std::size_t min_chunk,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace ntlgen
