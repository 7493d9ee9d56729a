#include "spsim/rng.hpp"

namespace spsim::rng {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Engine make_engine(std::uint64_t seed, Stream stream, std::uint64_t block) {
  std::uint64_t state = seed;
  std::uint64_t a = splitmix64(state);
  state ^= static_cast<std::uint64_t>(stream) * 0xD1B54A32D192ED03ULL;
  std::uint64_t b = splitmix64(state);
  state ^= block * 0x8CB92BA72F3D8DD7ULL;
  std::uint64_t c = splitmix64(state);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
  return Engine(seq);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t state = seed ^ (index * 0xA24BAED4963EE407ULL);
  splitmix64(state);
  return splitmix64(state);
}

}  // namespace spsim::rng
