#include "acube/degrade.hpp"

#include "acube/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace acube {

void DegradationSpec::validate() const {
    switch (kind) {
        case Kind::bicubic_down:
            if (scale != 2 && scale != 3 && scale != 4)
                throw std::invalid_argument("DegradationSpec: scale must be 2, 3 or 4");
            break;
        case Kind::awgn:
            if (!(sigma255 > 0)) throw std::invalid_argument("DegradationSpec: sigma must be > 0");
            break;
        case Kind::jpeg:
            if (quality < 1 || quality > 100)
                throw std::invalid_argument("DegradationSpec: quality must be in [1,100]");
            break;
    }
}

std::string DegradationSpec::str() const {
    switch (kind) {
        case Kind::bicubic_down: return "bicubic:" + std::to_string(scale);
        case Kind::awgn: {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "awgn:%g", sigma255);
            return buf;
        }
        case Kind::jpeg: return "jpeg:" + std::to_string(quality);
    }
    return "?";
}

namespace {

// Keys' cubic, a = -0.5
double cubic(double t) {
    t = std::fabs(t);
    if (t < 1.0) return 1.5 * t * t * t - 2.5 * t * t + 1.0;
    if (t < 2.0) return -0.5 * t * t * t + 2.5 * t * t - 4.0 * t + 2.0;
    return 0.0;
}

// one separable pass along x; transpose-style call handles y
std::vector<double> resample_line_weights(int in_n, int out_n, double scale, bool antialias,
                                          std::vector<int>& starts, int& taps) {
    double kscale = (antialias && scale < 1.0) ? scale : 1.0;
    double support = 2.0 / kscale;
    taps = static_cast<int>(std::ceil(support)) * 2 + 1;
    std::vector<double> weights(static_cast<size_t>(out_n) * taps, 0.0);
    starts.assign(out_n, 0);
    for (int o = 0; o < out_n; ++o) {
        double center = (o + 0.5) / scale - 0.5;
        int lo = static_cast<int>(std::floor(center - support)) + 1;
        starts[o] = lo;
        double sum = 0.0;
        for (int k = 0; k < taps; ++k) {
            double w = cubic((lo + k - center) * kscale);
            weights[static_cast<size_t>(o) * taps + k] = w;
            sum += w;
        }
        // partition of unity: constant inputs stay constant
        for (int k = 0; k < taps; ++k) weights[static_cast<size_t>(o) * taps + k] /= sum;
    }
    return weights;
}

} // namespace

ImageBuffer bicubic_resize(const ImageBuffer& img, double scale, bool antialias) {
    if (!(scale > 0)) throw std::invalid_argument("bicubic_resize: scale must be positive");
    int ow = static_cast<int>(std::lround(img.width * scale));
    int oh = static_cast<int>(std::lround(img.height * scale));
    if (ow < 1 || oh < 1) throw std::invalid_argument("bicubic_resize: result smaller than 1 pixel");
    if (scale == 1.0) return img;

    ImageBuffer out(ow, oh, img.channels, img.colorspace);

    // horizontal pass into an intermediate, then vertical
    std::vector<int> xs, ys;
    int xtaps = 0, ytaps = 0;
    std::vector<double> wx = resample_line_weights(img.width, ow, scale, antialias, xs, xtaps);
    std::vector<double> wy = resample_line_weights(img.height, oh, scale, antialias, ys, ytaps);

    ImageBuffer mid(ow, img.height, img.channels, img.colorspace);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < ow; ++x) {
                double acc = 0.0;
                for (int k = 0; k < xtaps; ++k) {
                    int sx = std::clamp(xs[x] + k, 0, img.width - 1);
                    acc += wx[static_cast<size_t>(x) * xtaps + k] * img.at(c, y, sx);
                }
                mid.at(c, y, x) = acc;
            }
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                double acc = 0.0;
                for (int k = 0; k < ytaps; ++k) {
                    int sy = std::clamp(ys[y] + k, 0, img.height - 1);
                    acc += wy[static_cast<size_t>(y) * ytaps + k] * mid.at(c, sy, x);
                }
                out.at(c, y, x) = acc;
            }
    return out;
}

ImageBuffer add_awgn(const ImageBuffer& img, double sigma255, uint64_t seed) {
    if (!(sigma255 > 0)) throw std::invalid_argument("add_awgn: sigma must be > 0");
    ImageBuffer out = img;
    StreamRng rng(seed, "awgn");
    double sigma = sigma255 / 255.0;
    for (double& v : out.data) v += sigma * rng.next_gaussian();
    return out;
}

namespace {

// Annex K luminance table
const int kLumaQuant[64] = {
    16, 11, 10, 16, 24,  40,  51,  61,  //
    12, 12, 14, 19, 26,  58,  60,  55,  //
    14, 13, 16, 24, 40,  57,  69,  56,  //
    14, 17, 22, 29, 51,  87,  80,  62,  //
    18, 22, 37, 56, 68,  109, 103, 77,  //
    24, 35, 55, 64, 81,  104, 113, 92,  //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99};

void dct8(const double in[64], double out[64]) {
    // 2-D DCT-II with the JPEG normalization: F(0,0) = sum/8
    static double cosT[8][8];
    static bool init = false;
    if (!init) {
        for (int u = 0; u < 8; ++u)
            for (int x = 0; x < 8; ++x) cosT[u][x] = std::cos((2 * x + 1) * u * M_PI / 16.0);
        init = true;
    }
    for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) {
            double acc = 0.0;
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) acc += in[y * 8 + x] * cosT[u][y] * cosT[v][x];
            double cu = u == 0 ? M_SQRT1_2 : 1.0;
            double cv = v == 0 ? M_SQRT1_2 : 1.0;
            out[u * 8 + v] = 0.25 * cu * cv * acc;
        }
}

void idct8(const double in[64], double out[64]) {
    static double cosT[8][8];
    static bool init = false;
    if (!init) {
        for (int u = 0; u < 8; ++u)
            for (int x = 0; x < 8; ++x) cosT[u][x] = std::cos((2 * x + 1) * u * M_PI / 16.0);
        init = true;
    }
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            double acc = 0.0;
            for (int u = 0; u < 8; ++u)
                for (int v = 0; v < 8; ++v) {
                    double cu = u == 0 ? M_SQRT1_2 : 1.0;
                    double cv = v == 0 ? M_SQRT1_2 : 1.0;
                    acc += cu * cv * in[u * 8 + v] * cosT[u][y] * cosT[v][x];
                }
            out[y * 8 + x] = 0.25 * acc;
        }
}

} // namespace

ImageBuffer jpeg_degrade(const ImageBuffer& img, int quality) {
    if (img.channels != 1) throw std::invalid_argument("jpeg_degrade: single channel only");
    if (quality < 1 || quality > 100) throw std::invalid_argument("jpeg_degrade: quality in [1,100]");

    // IJG quality scaling of the base table
    int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    int q[64];
    for (int i = 0; i < 64; ++i)
        q[i] = std::clamp((kLumaQuant[i] * scale + 50) / 100, 1, 255);

    const int w = img.width, h = img.height;
    const int bw = (w + 7) / 8, bh = (h + 7) / 8;
    ImageBuffer out(w, h, 1, img.colorspace);
    double block[64], coef[64], rec[64];
    for (int by = 0; by < bh; ++by)
        for (int bx = 0; bx < bw; ++bx) {
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) {
                    int sy = std::min(by * 8 + y, h - 1); // replicate past the edge
                    int sx = std::min(bx * 8 + x, w - 1);
                    block[y * 8 + x] = img.at(0, sy, sx) * 255.0 - 128.0;
                }
            dct8(block, coef);
            for (int i = 0; i < 64; ++i) coef[i] = std::round(coef[i] / q[i]) * q[i];
            idct8(coef, rec);
            for (int y = 0; y < 8; ++y) {
                int oy = by * 8 + y;
                if (oy >= h) break;
                for (int x = 0; x < 8; ++x) {
                    int ox = bx * 8 + x;
                    if (ox >= w) break;
                    out.at(0, oy, ox) = std::clamp((rec[y * 8 + x] + 128.0) / 255.0, 0.0, 1.0);
                }
            }
        }
    return out;
}

ImageBuffer apply_degradation(const ImageBuffer& hq, const DegradationSpec& spec, uint64_t salt) {
    spec.validate();
    switch (spec.kind) {
        case DegradationSpec::Kind::bicubic_down:
            return bicubic_resize(hq, 1.0 / spec.scale, true);
        case DegradationSpec::Kind::awgn:
            return add_awgn(hq, spec.sigma255, StreamRng::derive_key(spec.seed, "degrade") + salt);
        case DegradationSpec::Kind::jpeg:
            return jpeg_degrade(hq, spec.quality);
    }
    throw std::logic_error("apply_degradation: unreachable");
}

} // namespace acube
