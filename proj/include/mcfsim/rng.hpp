#pragma once

#include <cstdint>
#include <random>

namespace mcfsim {

using Rng = std::mt19937_64;

// Independent random streams used by one Monte-Carlo trial.
enum class Stream : std::uint64_t {
    prbs_victim = 1,
    prbs_aggressor = 2,
    noise_victim = 3,
    noise_aggressor = 4,
    coupling_phase = 5,
    laser_victim = 6,
    laser_aggressor = 7,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed for stream `id` of trial `trial` under `master`. Pure function of its
// arguments, so any single trial can be replayed in isolation.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial, Stream id) {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ splitmix64(trial + 0x632be59bd9b4e019ULL));
    return splitmix64(h ^ splitmix64(static_cast<std::uint64_t>(id) * 0xd1b54a32d192ed03ULL));
}

inline Rng make_rng(std::uint64_t master, std::uint64_t trial, Stream id) {
    return Rng(derive_seed(master, trial, id));
}

}  // namespace mcfsim
