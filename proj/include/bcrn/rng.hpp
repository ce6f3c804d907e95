#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace bcrn {

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Independent reproducible stream derived from (master seed, label, index).
/// Every stochastic component gets its own stream so that adding draws to one
/// component never perturbs another.
inline std::mt19937_64 make_stream(std::uint64_t master, std::string_view label,
                                   std::uint64_t index = 0) {
    std::uint64_t s = splitmix64(master ^ fnv1a64(label));
    s = splitmix64(s ^ (0x517cc1b727220a95ull * (index + 1)));
    return std::mt19937_64{s};
}

}  // namespace bcrn
