#pragma once

#include "acube/degrade.hpp"
#include "acube/image.hpp"
#include "acube/tensor.hpp"

#include <cstdint>

namespace acube {

struct PatchSampler {
    int patch_size = 48; // low-quality side
    int batch_size = 16;
    uint64_t seed = 0;
    bool augment = true;     // dihedral augmentation of each pair
    uint64_t image_salt = 0; // decorrelates noise between dataset images
};

struct Batch {
    Tensor lq; // [B, C, p, p]
    Tensor hq; // [B, C, p*scale, p*scale] for SR, [B, C, p, p] otherwise
};

// Cuts aligned HQ/LQ patch pairs: the HQ patch is cut first (scale-aligned
// for SR), augmented by one of the 8 dihedral transforms, then degraded.
// Patch positions and transforms are drawn from (sampler.seed, iteration);
// stochastic degradations are keyed by (image_salt, position, transform)
// so the degraded corpus itself is fixed.
Batch sample_batch(const ImageBuffer& hq, const DegradationSpec& spec, const PatchSampler& sampler,
                   uint64_t iteration = 0);

} // namespace acube
