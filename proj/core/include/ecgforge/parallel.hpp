#pragma once

#include <cstdint>
#include <functional>

namespace ecgforge {

/// Number of worker threads used inside batched tensor operations.
/// Results are bit-identical across runs for a fixed thread count; the
/// count is part of a run's recorded configuration.
int thread_count();
void set_thread_count(int n);

/// Statically partitions [0, n) into contiguous chunks, one per thread.
/// The partition depends only on (n, thread_count), never on scheduling,
/// so per-chunk accumulations can be merged in chunk order deterministically.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t begin, std::int64_t end, int chunk)>& body);

/// Chunk count used by parallel_for for a loop of size n.
int parallel_chunks(std::int64_t n);

}  // namespace ecgforge
