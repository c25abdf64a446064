#pragma once

#include "acube/image.hpp"

#include <cstdint>
#include <string>

namespace acube {

struct DegradationSpec {
    enum class Kind { bicubic_down, awgn, jpeg };
    Kind kind = Kind::awgn;
    int scale = 2;         // bicubic_down: one of {2, 3, 4}
    double sigma255 = 30;  // awgn: std on the 0..255 scale
    int quality = 10;      // jpeg: 1..100
    uint64_t seed = 0;     // stochastic kinds

    void validate() const;
    std::string str() const;
};

// Separable cubic resampling (a = -0.5); when downscaling with antialias
// the kernel support widens by 1/scale. scale covers {1/4, 1/3, 1/2, 1, 2, 3, 4}.
ImageBuffer bicubic_resize(const ImageBuffer& img, double scale, bool antialias);

// i.i.d. zero-mean Gaussian noise with std sigma255/255; output unclipped.
ImageBuffer add_awgn(const ImageBuffer& img, double sigma255, uint64_t seed);

// 8x8 DCT codec with the standard luminance quantization table scaled by
// the usual quality law (q < 50: 5000/q percent, else 200 - 2q); output
// clipped to [0,1]. Edge blocks are padded by replication. Single channel.
ImageBuffer jpeg_degrade(const ImageBuffer& img, int quality);

// Applies the degradation; `salt` separates noise draws between
// iterations/samples while staying reproducible from spec.seed.
ImageBuffer apply_degradation(const ImageBuffer& hq, const DegradationSpec& spec, uint64_t salt);

} // namespace acube
