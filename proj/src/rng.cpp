#include "boed/rng.hpp"

#include <algorithm>
#include <numeric>

namespace boed {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view stage,
                          std::uint64_t index) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : stage) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    std::uint64_t s = splitmix64(parent);
    s = splitmix64(s ^ h);
    s = splitmix64(s ^ index);
    return s;
}

double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

std::size_t uniform_index(Rng& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

double standard_normal(Rng& rng) {
    return std::normal_distribution<double>(0.0, 1.0)(rng);
}

double sample_gamma(Rng& rng, double shape) {
    return std::gamma_distribution<double>(shape, 1.0)(rng);
}

double sample_beta(Rng& rng, double a, double b) {
    const double x = sample_gamma(rng, a);
    const double y = sample_gamma(rng, b);
    const double s = x + y;
    if (!(s > 0.0)) return a / (a + b);
    return x / s;
}

std::vector<std::size_t> random_permutation(Rng& rng, std::size_t n) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    std::shuffle(p.begin(), p.end(), rng);
    return p;
}

}  // namespace boed
