#include "relufe/sampling.hpp"

namespace relufe {

std::mt19937_64 chunk_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t chunk) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(chunk >> 32)};
  return std::mt19937_64(seq);
}

PointSet uniform_box_points(const Vec& lo, const Vec& hi, std::size_t count, std::uint64_t seed,
                            std::uint64_t stream, Exec exec) {
  const Eigen::Index n = lo.size();
  PointSet pts(n, static_cast<Eigen::Index>(count));
  const std::size_t chunks = (count + kSampleChunk - 1) / kSampleChunk;
  const bool parallel = exec == Exec::parallel;
#pragma omp parallel for if (parallel)
  for (std::size_t c = 0; c < chunks; ++c) {
    auto rng = chunk_rng(seed, stream, c);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t end = std::min(count, (c + 1) * kSampleChunk);
    for (std::size_t i = c * kSampleChunk; i < end; ++i) {
      for (Eigen::Index k = 0; k < n; ++k) {
        pts(k, static_cast<Eigen::Index>(i)) = lo(k) + (hi(k) - lo(k)) * unit(rng);
      }
    }
  }
  return pts;
}

}  // namespace relufe
