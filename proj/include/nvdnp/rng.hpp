#pragma once

#include <cstdint>
#include <random>

namespace nvdnp {

// Purpose tags keep the seed schedule of independent consumers disjoint.
// The (seed, purpose, index) triple fully determines a stream, so results do
// not depend on scheduling or worker count.
enum class StreamPurpose : std::uint64_t {
    bath_init = 1,
    diffusion = 2,
    moments = 3,
    correlation = 4,
    param_draw = 5,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic per-(seed,purpose,index) generator stream.
inline std::mt19937_64 make_stream(std::uint64_t seed, StreamPurpose purpose,
                                   std::uint64_t index = 0) {
    std::uint64_t s = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(purpose)));
    s = splitmix64(s ^ splitmix64(index + 0x51ed270b7a4fced1ULL));
    return std::mt19937_64(s);
}

} // namespace nvdnp
