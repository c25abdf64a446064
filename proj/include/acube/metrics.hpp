#pragma once

#include "acube/image.hpp"

namespace acube {

// 10 * log10(1 / MSE) on [0,1]-clipped values, optionally ignoring a border
// of `shave` pixels. Identical images give +infinity.
double psnr(const ImageBuffer& a, const ImageBuffer& b, int shave = 0);

// Structural similarity with the standard 11x11 Gaussian window (sigma 1.5),
// K1 = 0.01, K2 = 0.03, dynamic range 1; mean over valid windows. Inputs are
// clipped to [0,1] first. Single channel.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

} // namespace acube
