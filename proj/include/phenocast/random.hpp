#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace phenocast {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Derives an independent stream seed from a master seed and a task path,
/// e.g. derive_seed(seed, {replicate}) or derive_seed(seed, {year, day}).
/// Streams depend only on (master, path), never on execution order.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept;

inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(master, path));
}

// Task tags used when deriving per-task streams from the single --seed.
namespace stream {
inline constexpr std::uint64_t bootstrap = 0x626f6f74;    // "boot"
inline constexpr std::uint64_t paths = 0x70617468;        // "path"
inline constexpr std::uint64_t synthetic = 0x73796e74;    // "synt"
inline constexpr std::uint64_t cv = 0x63760000;           // "cv"
inline constexpr std::uint64_t simstudy = 0x73696d73;     // "sims"
inline constexpr std::uint64_t test_year = 0x74657374;    // "test"
}  // namespace stream

}  // namespace phenocast
