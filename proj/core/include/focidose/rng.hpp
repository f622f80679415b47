#pragma once

#include <cstdint>
#include <random>

namespace focidose {

// SplitMix64 step; used to spread seeds so that nearby (seed, stream) pairs
// yield uncorrelated engine states.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic substream engine: the pair (seed, stream) fully determines
// the sequence, independent of how many threads consume other streams.
inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t s = seed ^ (0xd1b54a32d192ed03ULL * (stream + 1));
    std::seed_seq seq{splitmix64(s), splitmix64(s), splitmix64(s), splitmix64(s)};
    return std::mt19937_64(seq);
}

}  // namespace focidose
