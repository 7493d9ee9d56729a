#pragma once

#include <cstdint>
#include <random>

namespace spsim::rng {

using Engine = std::mt19937_64;

/// Independent stream identifiers. Each Monte Carlo stage draws from its own
/// family of substreams so stages can be re-run or reordered without
/// perturbing one another.
enum class Stream : std::uint64_t {
  Blinking = 1,
  Emission = 2,
  Detection = 3,
  DarkCounts = 4,
  Streak = 5,
  Background = 6,
  Calibration = 7,
  Test = 99,
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Deterministic engine for (seed, stream, block). Blocks of the same stream
/// are statistically independent, which lets block-parallel kernels reproduce
/// the single-threaded result bit for bit.
Engine make_engine(std::uint64_t seed, Stream stream, std::uint64_t block = 0);

/// Derives a child seed, e.g. one seed per point of a parameter sweep.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace spsim::rng
