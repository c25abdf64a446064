#include "acube/sampler.hpp"

#include "acube/rng.hpp"

#include <stdexcept>

namespace acube {

namespace {

ImageBuffer crop(const ImageBuffer& img, int x0, int y0, int size) {
    ImageBuffer out(size, size, img.channels, img.colorspace);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) out.at(c, y, x) = img.at(c, y0 + y, x0 + x);
    return out;
}

void copy_into_tensor(Tensor& t, int slot, const ImageBuffer& img) {
    const Shape s = t.shape();
    double* dst = t.mutable_data() + static_cast<int64_t>(slot) * s.c * s.h * s.w;
    std::copy(img.data.begin(), img.data.end(), dst);
}

} // namespace

Batch sample_batch(const ImageBuffer& hq, const DegradationSpec& spec, const PatchSampler& sampler,
                   uint64_t iteration) {
    spec.validate();
    const bool sr = spec.kind == DegradationSpec::Kind::bicubic_down;
    const int scale = sr ? spec.scale : 1;
    const int lq_size = sampler.patch_size;
    const int hq_size = lq_size * scale;
    if (hq.width < hq_size || hq.height < hq_size)
        throw std::invalid_argument("sample_batch: image " + std::to_string(hq.width) + "x" +
                                    std::to_string(hq.height) + " too small for a " +
                                    std::to_string(hq_size) + " patch");

    Tensor lq_batch({sampler.batch_size, hq.channels, lq_size, lq_size});
    Tensor hq_batch({sampler.batch_size, hq.channels, hq_size, hq_size});

    StreamRng rng(sampler.seed, "sample/" + std::to_string(iteration));
    for (int i = 0; i < sampler.batch_size; ++i) {
        // origin on the LQ grid, scaled up so SR patches stay aligned
        int max_x = hq.width / scale - lq_size;
        int max_y = hq.height / scale - lq_size;
        int x0 = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(max_x + 1)) * scale;
        int y0 = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(max_y + 1)) * scale;
        int t = sampler.augment ? static_cast<int>(rng.next_u64() % 8) : 0;

        ImageBuffer hq_patch = dihedral_transform(crop(hq, x0, y0, hq_size), t);
        // the noise salt is a function of (image, position, transform), not
        // of the iteration: the degraded corpus is fixed, as if generated
        // offline, so repeated visits see the same low-quality patch
        uint64_t salt = (sampler.image_salt * 0x9E3779B9ULL + static_cast<uint64_t>(y0)) * 0x85EBCA77ULL +
                        static_cast<uint64_t>(x0) * 8ULL + static_cast<uint64_t>(t);
        ImageBuffer lq_patch = apply_degradation(hq_patch, spec, salt);
        copy_into_tensor(hq_batch, i, hq_patch);
        copy_into_tensor(lq_batch, i, lq_patch);
    }
    return {lq_batch, hq_batch};
}

} // namespace acube
