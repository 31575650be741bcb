#pragma once

#include <cstdint>
#include <random>

namespace semmap {

/// Random source used by every sampling routine. Reproducible given its seed.
using Rng = std::mt19937_64;

/// Independent stream `stream` derived from a base seed. Streams with
/// different indices are decorrelated through std::seed_seq mixing, so
/// parallel workers can each take `make_rng(seed, worker_index)`.
[[nodiscard]] inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

} // namespace semmap
