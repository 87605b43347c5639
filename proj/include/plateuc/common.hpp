#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace plateuc {

inline constexpr double pi = 3.14159265358979323846;

using ScalarFunc = std::function<double(double, double)>;
using Func1D = std::function<double(double)>;

// Bad user input: rejected configurations, malformed expressions, radii out of
// order, resolutions that are not 2^k+1, and the like.
struct invalid_parameter : std::runtime_error {
    explicit invalid_parameter(const std::string& msg) : std::runtime_error(msg) {}
};

// A computation that started from valid input but broke down: singular
// factorization, degenerate stiffness, non-convergent fixed point.
struct numerical_failure : std::runtime_error {
    explicit numerical_failure(const std::string& msg) : std::runtime_error(msg) {}
};

inline bool is_pow2_plus_1(int n) {
    if (n < 3) return false;
    int m = n - 1;
    return (m & (m - 1)) == 0;
}

// Deterministic 64-bit stream used wherever seeded randomness is needed.
// std::uniform_real_distribution is implementation-defined, so outputs are
// derived from the raw stream directly to keep results reproducible.
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }
    // uniform in [-1, 1]
    double symmetric() { return 2.0 * uniform() - 1.0; }
};

// FNV-1a, used for config hashes and output checksums in run manifests.
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

}  // namespace plateuc
