#pragma once

#include <cstdint>
#include <random>

namespace mspgm {

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t x) noexcept;

/// Seed for a sub-stream identified by (base, a, b). Distinct tuples give unrelated streams.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) noexcept;

/// Per-path generator: every path j of a batch owns its own stream so results do not
/// depend on how paths are split across workers.
std::mt19937_64 path_stream(std::uint64_t seed, std::uint64_t path) noexcept;

}  // namespace mspgm
