#pragma once

#include <cstdint>
#include <random>

namespace scs::rng {

/// Independent substreams for the simulation. Each draw is keyed by the master
/// seed, the run index, what it is used for, and an optional extra coordinate,
/// so results never depend on which thread performs a run.
enum class Purpose : std::uint64_t {
    Variances = 1,
    MeanNoise = 2,
    Graph = 3,
    Panel = 4,
    User = 100,
};

/// splitmix64 output function.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t stream_key(std::uint64_t master, std::uint64_t run, Purpose purpose,
                                   std::uint64_t extra = 0) noexcept {
    std::uint64_t h = mix64(master);
    h = mix64(h ^ run);
    h = mix64(h ^ static_cast<std::uint64_t>(purpose));
    return mix64(h ^ extra);
}

std::mt19937_64 engine(std::uint64_t master, std::uint64_t run, Purpose purpose, std::uint64_t extra = 0);

}  // namespace scs::rng
