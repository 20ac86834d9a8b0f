#pragma once

#include <cstdint>
#include <random>

namespace ddf {

// splitmix64 step; used to derive independent sub-seeds from one master seed
// so that every consumer of randomness is explicitly seeded.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Sub-seed for a named stream index. split_seed(s, i) != split_seed(s, j)
// for i != j except with negligible probability.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    return std::mt19937_64(seed);
}

}  // namespace ddf
