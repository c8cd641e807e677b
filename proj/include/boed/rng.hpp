#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace boed {

using Rng = std::mt19937_64;

// Seeds are derived hierarchically: a stream is identified by its parent
// seed, a stage name and an index, e.g. ("eval", 17) -> ("train", 0).
// derive_seed is a pure function of those three values (FNV-1a over the
// stage name, combined with the parent and index and mixed by splitmix64).
std::uint64_t derive_seed(std::uint64_t parent, std::string_view stage,
                          std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t parent, std::string_view stage,
                    std::uint64_t index = 0) {
    return Rng(derive_seed(parent, stage, index));
}

std::uint64_t splitmix64(std::uint64_t x);

double uniform01(Rng& rng);
bool bernoulli(Rng& rng, double p);
// Uniform integer in [0, n); n must be positive.
std::size_t uniform_index(Rng& rng, std::size_t n);
double standard_normal(Rng& rng);
double sample_gamma(Rng& rng, double shape);
double sample_beta(Rng& rng, double a, double b);

// Uniform pick from an explicit candidate set.
template <class T>
const T& uniform_pick(Rng& rng, const std::vector<T>& items) {
    return items[uniform_index(rng, items.size())];
}

// Random permutation of 0..n-1 (Fisher-Yates).
std::vector<std::size_t> random_permutation(Rng& rng, std::size_t n);

}  // namespace boed
