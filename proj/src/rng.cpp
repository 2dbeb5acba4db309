#include "scs/rng.hpp"

namespace scs::rng {

std::mt19937_64 engine(std::uint64_t master, std::uint64_t run, Purpose purpose, std::uint64_t extra) {
    const std::uint64_t key = stream_key(master, run, purpose, extra);
    std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace scs::rng
