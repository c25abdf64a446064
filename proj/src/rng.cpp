#include "acube/rng.hpp"

#include <cmath>

namespace acube {

namespace {

inline uint64_t mix64(uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace

uint64_t StreamRng::derive_key(uint64_t seed, std::string_view stream_id) {
    return mix64(seed + 0x9E3779B97F4A7C15ULL) ^ fnv1a64(stream_id);
}

uint64_t StreamRng::next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
}

double StreamRng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double StreamRng::next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
}

double StreamRng::next_gaussian() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    double u1 = 1.0 - next_double(); // (0, 1], keeps log finite
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double t = 2.0 * M_PI * u2;
    cached_ = r * std::sin(t);
    has_cached_ = true;
    return r * std::cos(t);
}

} // namespace acube
