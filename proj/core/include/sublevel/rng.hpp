#pragma once

#include <cstdint>
#include <vector>

namespace sublevel {

std::uint64_t splitmix64(std::uint64_t x);

// Seed of iteration k for a method seeded with `seed`.
inline std::uint64_t iteration_seed(std::uint64_t seed, std::uint64_t k) { return seed ^ k; }

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial);

// First `count` entries of a seeded Fisher-Yates shuffle of 0..n-1, sorted.
// The prefix property makes samples for a smaller count a subset of larger ones.
std::vector<int> sample_without_replacement(int n, int count, std::uint64_t seed);

}  // namespace sublevel
