#pragma once

#include "acube/tensor.hpp"

#include <string>
#include <vector>

namespace acube {

enum class ColorSpace { gray, rgb, y_of_ycbcr };

// Decoded image: doubles in [0, 1] (AWGN may push values outside; they are
// kept unclipped until metric or save time), planes stored channel-major.
struct ImageBuffer {
    int width = 0, height = 0, channels = 1;
    ColorSpace colorspace = ColorSpace::gray;
    std::vector<double> data; // channels * height * width

    ImageBuffer() = default;
    ImageBuffer(int w, int h, int c, ColorSpace cs = ColorSpace::gray)
        : width(w), height(h), channels(c), colorspace(cs),
          data(static_cast<size_t>(w) * h * c, 0.0) {}

    double at(int c, int y, int x) const {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }
    double& at(int c, int y, int x) {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }
    size_t pixel_count() const { return static_cast<size_t>(width) * height; }
};

// Binary PGM (P5) / PPM (P6) with maxval 255, plus read-only 8-bit
// non-interlaced baseline PNG (gray or RGB). Save picks the container from
// the extension (.pgm/.ppm); values are clamped to [0,1] and quantized to
// 8 bits at save time only.
ImageBuffer load_image(const std::string& path);
void save_image(const ImageBuffer& img, const std::string& path);

// ITU-R BT.601 studio-swing luma: Y = (65.481 R + 128.553 G + 24.966 B + 16) / 255
ImageBuffer rgb_to_y(const ImageBuffer& img);

// The 8 symmetries generated by 90-degree rotation and horizontal flip.
// t in [0, 8): t & 3 selects the rotation count, t & 4 flips first.
ImageBuffer dihedral_transform(const ImageBuffer& img, int t);
int dihedral_inverse(int t);

ImageBuffer clip01(const ImageBuffer& img);

// [1, C, H, W] tensor of an image and back
Tensor image_to_tensor(const ImageBuffer& img);
ImageBuffer tensor_to_image(const Tensor& t, int batch_index, ColorSpace cs);

} // namespace acube
