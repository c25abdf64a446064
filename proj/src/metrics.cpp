#include "acube/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace acube {

double psnr(const ImageBuffer& a, const ImageBuffer& b, int shave) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        throw std::invalid_argument("psnr: shape mismatch");
    if (a.width <= 2 * shave || a.height <= 2 * shave)
        throw std::invalid_argument("psnr: shave leaves no pixels");
    double acc = 0.0;
    int64_t n = 0;
    for (int c = 0; c < a.channels; ++c)
        for (int y = shave; y < a.height - shave; ++y)
            for (int x = shave; x < a.width - shave; ++x) {
                double va = std::clamp(a.at(c, y, x), 0.0, 1.0);
                double vb = std::clamp(b.at(c, y, x), 0.0, 1.0);
                double d = va - vb;
                acc += d * d;
                ++n;
            }
    double mse = acc / static_cast<double>(n);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

namespace {

// 11-tap Gaussian, sigma 1.5, normalized
const std::vector<double>& gauss11() {
    static std::vector<double> g = [] {
        std::vector<double> v(11);
        double sum = 0.0;
        for (int i = 0; i < 11; ++i) {
            double d = i - 5.0;
            v[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
            sum += v[i];
        }
        for (double& x : v) x /= sum;
        return v;
    }();
    return g;
}

// valid-region separable filtering: output is (h-10) x (w-10)
std::vector<double> filter_valid(const std::vector<double>& img, int w, int h, int& ow, int& oh) {
    const std::vector<double>& g = gauss11();
    ow = w - 10;
    oh = h - 10;
    std::vector<double> mid(static_cast<size_t>(ow) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < 11; ++k) acc += g[k] * img[static_cast<size_t>(y) * w + x + k];
            mid[static_cast<size_t>(y) * ow + x] = acc;
        }
    std::vector<double> out(static_cast<size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < 11; ++k) acc += g[k] * mid[static_cast<size_t>(y + k) * ow + x];
            out[static_cast<size_t>(y) * ow + x] = acc;
        }
    return out;
}

} // namespace

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        throw std::invalid_argument("ssim: shape mismatch");
    if (a.channels != 1) throw std::invalid_argument("ssim: single channel only");
    if (a.width < 11 || a.height < 11)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");

    const int w = a.width, h = a.height;
    const size_t n = a.pixel_count();
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (size_t i = 0; i < n; ++i) {
        double va = std::clamp(a.data[i], 0.0, 1.0);
        double vb = std::clamp(b.data[i], 0.0, 1.0);
        x[i] = va;
        y[i] = vb;
        xx[i] = va * va;
        yy[i] = vb * vb;
        xy[i] = va * vb;
    }
    int ow = 0, oh = 0;
    std::vector<double> mx = filter_valid(x, w, h, ow, oh);
    std::vector<double> my = filter_valid(y, w, h, ow, oh);
    std::vector<double> mxx = filter_valid(xx, w, h, ow, oh);
    std::vector<double> myy = filter_valid(yy, w, h, ow, oh);
    std::vector<double> mxy = filter_valid(xy, w, h, ow, oh);

    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double acc = 0.0;
    for (size_t i = 0; i < mx.size(); ++i) {
        double sx = mxx[i] - mx[i] * mx[i];
        double sy = myy[i] - my[i] * my[i];
        double sxy = mxy[i] - mx[i] * my[i];
        double num = (2.0 * mx[i] * my[i] + c1) * (2.0 * sxy + c2);
        double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (sx + sy + c2);
        acc += num / den;
    }
    return acc / static_cast<double>(mx.size());
}

} // namespace acube
