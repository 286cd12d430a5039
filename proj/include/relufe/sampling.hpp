#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "relufe/types.hpp"

namespace relufe {

/// Deterministic stream for a (seed, stream, chunk) triple. Point batches are
/// split into fixed-size chunks, each with its own generator, so results do
/// not depend on the thread count.
std::mt19937_64 chunk_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t chunk);

inline constexpr std::size_t kSampleChunk = 1024;

/// `count` points uniform in the box [lo, hi].
PointSet uniform_box_points(const Vec& lo, const Vec& hi, std::size_t count, std::uint64_t seed,
                            std::uint64_t stream, Exec exec = Exec::parallel);

}  // namespace relufe
