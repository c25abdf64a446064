#include "acube/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <zlib.h>

namespace acube {

namespace {

uint8_t quantize8(double v) {
    double c = std::clamp(v, 0.0, 1.0);
    return static_cast<uint8_t>(std::lround(c * 255.0));
}

int read_pnm_token(std::istream& in) {
    // skips whitespace and '#' comments, reads one non-negative integer
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n') ch = in.get();
        } else if (!std::isspace(ch)) {
            break;
        }
        ch = in.get();
    }
    if (ch == EOF || !std::isdigit(ch)) throw std::runtime_error("malformed PNM header");
    int v = 0;
    while (ch != EOF && std::isdigit(ch)) {
        v = v * 10 + (ch - '0');
        if (v > 1 << 30) throw std::runtime_error("malformed PNM header");
        ch = in.get();
    }
    if (ch == EOF) throw std::runtime_error("truncated PNM file");
    return v;
}

ImageBuffer load_pnm(std::ifstream& in, bool color) {
    int w = read_pnm_token(in);
    int h = read_pnm_token(in);
    int maxval = read_pnm_token(in);
    if (w < 1 || h < 1) throw std::runtime_error("malformed PNM header");
    if (maxval != 255) throw std::runtime_error("only 8-bit PNM supported");
    int c = color ? 3 : 1;
    std::vector<uint8_t> raw(static_cast<size_t>(w) * h * c);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<size_t>(in.gcount()) != raw.size()) throw std::runtime_error("truncated PNM file");

    ImageBuffer img(w, h, c, color ? ColorSpace::rgb : ColorSpace::gray);
    // PNM is interleaved; planes here
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ci = 0; ci < c; ++ci)
                img.at(ci, y, x) = raw[(static_cast<size_t>(y) * w + x) * c + ci] / 255.0;
    return img;
}

uint32_t be32(const uint8_t* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

int paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

ImageBuffer load_png(const std::vector<uint8_t>& bytes) {
    static const uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    if (bytes.size() < 8 || std::memcmp(bytes.data(), sig, 8) != 0)
        throw std::runtime_error("not a PNG file");

    size_t pos = 8;
    int w = 0, h = 0, bit_depth = 0, color_type = 0;
    std::vector<uint8_t> idat;
    bool saw_end = false;
    while (pos + 8 <= bytes.size()) {
        uint32_t len = be32(&bytes[pos]);
        if (pos + 12 + len > bytes.size()) throw std::runtime_error("truncated PNG file");
        std::string type(reinterpret_cast<const char*>(&bytes[pos + 4]), 4);
        const uint8_t* payload = &bytes[pos + 8];
        uint32_t expect = be32(&bytes[pos + 8 + len]);
        uint32_t got = crc32(crc32(0L, Z_NULL, 0), &bytes[pos + 4], len + 4);
        if (expect != got) throw std::runtime_error("PNG chunk CRC mismatch");
        if (type == "IHDR") {
            if (len != 13) throw std::runtime_error("malformed PNG IHDR");
            w = static_cast<int>(be32(payload));
            h = static_cast<int>(be32(payload + 4));
            bit_depth = payload[8];
            color_type = payload[9];
            if (payload[10] != 0 || payload[11] != 0) throw std::runtime_error("unsupported PNG compression");
            if (payload[12] != 0) throw std::runtime_error("interlaced PNG not supported");
            if (bit_depth != 8 || (color_type != 0 && color_type != 2))
                throw std::runtime_error("only 8-bit gray/RGB PNG supported");
        } else if (type == "IDAT") {
            idat.insert(idat.end(), payload, payload + len);
        } else if (type == "IEND") {
            saw_end = true;
            break;
        }
        pos += 12 + len;
    }
    if (w < 1 || h < 1 || !saw_end || idat.empty()) throw std::runtime_error("truncated PNG file");

    const int c = color_type == 2 ? 3 : 1;
    const size_t stride = static_cast<size_t>(w) * c;
    std::vector<uint8_t> raw((stride + 1) * h);
    uLongf out_len = static_cast<uLongf>(raw.size());
    int zrc = uncompress(raw.data(), &out_len, idat.data(), static_cast<uLong>(idat.size()));
    if (zrc != Z_OK || out_len != raw.size()) throw std::runtime_error("PNG inflate failed");

    // undo per-row filters in place
    std::vector<uint8_t> pixels(stride * h);
    for (int y = 0; y < h; ++y) {
        uint8_t filter = raw[(stride + 1) * y];
        const uint8_t* src = &raw[(stride + 1) * y + 1];
        uint8_t* dst = &pixels[stride * y];
        const uint8_t* up = y > 0 ? &pixels[stride * (y - 1)] : nullptr;
        for (size_t i = 0; i < stride; ++i) {
            int a = i >= static_cast<size_t>(c) ? dst[i - c] : 0;
            int b = up ? up[i] : 0;
            int cc = (up && i >= static_cast<size_t>(c)) ? up[i - c] : 0;
            int v = src[i];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, cc); break;
                default: throw std::runtime_error("unsupported PNG filter");
            }
            dst[i] = static_cast<uint8_t>(v & 0xFF);
        }
    }

    ImageBuffer img(w, h, c, c == 3 ? ColorSpace::rgb : ColorSpace::gray);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ci = 0; ci < c; ++ci)
                img.at(ci, y, x) = pixels[(static_cast<size_t>(y) * w + x) * c + ci] / 255.0;
    return img;
}

} // namespace

ImageBuffer load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    int m0 = in.get(), m1 = in.get();
    if (m0 == 'P' && m1 == '5') return load_pnm(in, false);
    if (m0 == 'P' && m1 == '6') return load_pnm(in, true);
    if (m0 == 137 && m1 == 'P') {
        in.seekg(0);
        std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
        return load_png(bytes);
    }
    throw std::runtime_error("unsupported image format in " + path);
}

void save_image(const ImageBuffer& img, const std::string& path) {
    bool color;
    if (path.size() > 4 && path.substr(path.size() - 4) == ".pgm")
        color = false;
    else if (path.size() > 4 && path.substr(path.size() - 4) == ".ppm")
        color = true;
    else
        throw std::runtime_error("save_image: use a .pgm or .ppm path, got " + path);
    if (color && img.channels != 3)
        throw std::runtime_error("save_image: PPM needs 3 channels");
    if (!color && img.channels != 1)
        throw std::runtime_error("save_image: PGM needs 1 channel");

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << (color ? "P6" : "P5") << "\n" << img.width << " " << img.height << "\n255\n";
    std::vector<uint8_t> raw(img.pixel_count() * img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                raw[(static_cast<size_t>(y) * img.width + x) * img.channels + c] =
                    quantize8(img.at(c, y, x));
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw std::runtime_error("write failed for " + path);
}

ImageBuffer rgb_to_y(const ImageBuffer& img) {
    if (img.channels != 3) throw std::invalid_argument("rgb_to_y: input must have 3 channels");
    ImageBuffer out(img.width, img.height, 1, ColorSpace::y_of_ycbcr);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double r = img.at(0, y, x), g = img.at(1, y, x), b = img.at(2, y, x);
            out.at(0, y, x) = (65.481 * r + 128.553 * g + 24.966 * b + 16.0) / 255.0;
        }
    return out;
}

ImageBuffer dihedral_transform(const ImageBuffer& img, int t) {
    if (t < 0 || t > 7) throw std::invalid_argument("dihedral_transform: t must be in [0,8)");
    bool flip = t & 4;
    int rot = t & 3;
    int w = img.width, h = img.height;
    int ow = (rot % 2 == 0) ? w : h;
    int oh = (rot % 2 == 0) ? h : w;
    ImageBuffer out(ow, oh, img.channels, img.colorspace);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                // invert the output coordinate through the rotation, then
                // flip the source column (flip happens first, rotation second)
                int sx = 0, sy = 0;
                switch (rot) {
                    case 0: sy = y; sx = x; break;
                    case 1: sy = x; sx = w - 1 - y; break; // 90 deg ccw
                    case 2: sy = h - 1 - y; sx = w - 1 - x; break;
                    case 3: sy = h - 1 - x; sx = y; break; // 270 deg ccw
                }
                if (flip) sx = w - 1 - sx;
                out.at(c, y, x) = img.at(c, sy, sx);
            }
    return out;
}

int dihedral_inverse(int t) {
    // pure rotations invert to 4-k; every flipped element is an involution
    static const int inv[8] = {0, 3, 2, 1, 4, 5, 6, 7};
    return inv[t];
}

ImageBuffer clip01(const ImageBuffer& img) {
    ImageBuffer out = img;
    for (double& v : out.data) v = std::clamp(v, 0.0, 1.0);
    return out;
}

Tensor image_to_tensor(const ImageBuffer& img) {
    Tensor t({1, img.channels, img.height, img.width});
    std::copy(img.data.begin(), img.data.end(), t.mutable_data());
    return t;
}

ImageBuffer tensor_to_image(const Tensor& t, int batch_index, ColorSpace cs) {
    const Shape s = t.shape();
    if (batch_index < 0 || batch_index >= s.b)
        throw std::invalid_argument("tensor_to_image: batch index out of range");
    ImageBuffer img(static_cast<int>(s.w), static_cast<int>(s.h), static_cast<int>(s.c), cs);
    const double* src = t.data() + batch_index * s.c * s.h * s.w;
    std::copy(src, src + s.c * s.h * s.w, img.data.begin());
    return img;
}

} // namespace acube
