#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace mspgm {

/// [first, first + count) ranges of at most `chunk` items covering [0, total).
std::vector<std::pair<std::size_t, std::size_t>> chunk_ranges(std::size_t total, std::size_t chunk);

/// Runs fn(0..count-1) on up to `threads` workers. Work items must be independent; callers
/// reduce per-item results in index order so the outcome does not depend on `threads`.
/// The first exception (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace mspgm
