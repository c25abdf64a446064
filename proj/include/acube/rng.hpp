#pragma once

#include <cstdint>
#include <string_view>

namespace acube {

// Counter-based SplitMix64 stream. Streams are keyed by (seed, stream-id),
// so independent consumers (weight init, patch sampling, noise, ...) never
// share state and any stream can be reproduced from its key alone.
class StreamRng {
public:
    StreamRng(uint64_t seed, std::string_view stream_id)
        : state_(derive_key(seed, stream_id)) {}

    explicit StreamRng(uint64_t raw_key) : state_(raw_key) {}

    uint64_t next_u64();

    // uniform in [0, 1), 53-bit resolution
    double next_double();

    double next_uniform(double lo, double hi);

    // standard normal via Box-Muller (pairs cached)
    double next_gaussian();

    static uint64_t derive_key(uint64_t seed, std::string_view stream_id);

private:
    uint64_t state_;
    bool has_cached_ = false;
    double cached_ = 0.0;
};

} // namespace acube
