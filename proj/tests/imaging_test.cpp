#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "acube/degrade.hpp"
#include "acube/image.hpp"
#include "acube/metrics.hpp"
#include "acube/rng.hpp"
#include "acube/sampler.hpp"

#include "test_support.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <zlib.h>

using namespace acube;
using namespace testsupport;

namespace {

ImageBuffer synthetic_image(int w, int h, int channels, uint64_t seed) {
    // smooth gradients plus texture so the metrics see realistic structure
    StreamRng rng(seed, "synth");
    double fx = 2.0 + 6.0 * rng.next_double();
    double fy = 2.0 + 6.0 * rng.next_double();
    double phase = rng.next_double() * 6.28318;
    ImageBuffer img(w, h, channels, channels == 3 ? ColorSpace::rgb : ColorSpace::gray);
    for (int c = 0; c < channels; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double v = 0.5 + 0.2 * std::sin(fx * x / w * 6.28318 + phase + c) +
                           0.2 * std::cos(fy * y / h * 6.28318) +
                           0.08 * (rng.next_double() - 0.5) + 0.1 * (x + y) / (w + h);
                img.at(c, y, x) = std::clamp(v, 0.0, 1.0);
            }
    return img;
}

std::string temp_path(const std::string& name) {
    std::filesystem::create_directories("imaging_tmp");
    return "imaging_tmp/" + name;
}

} // namespace

TEST_CASE("pgm round trip is bit exact") {
    ImageBuffer img = synthetic_image(31, 17, 1, 1);
    std::string path = temp_path("rt.pgm");
    save_image(img, path);
    ImageBuffer back = load_image(path);
    // quantize the original the same way the writer does
    bool equal = true;
    for (size_t i = 0; i < img.data.size(); ++i) {
        double q = std::lround(std::clamp(img.data[i], 0.0, 1.0) * 255.0) / 255.0;
        equal = equal && back.data[i] == q;
    }
    CHECK(equal);
    // a second save of loaded data is byte-identical
    std::string path2 = temp_path("rt2.pgm");
    save_image(back, path2);
    std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
}

TEST_CASE("ppm round trip and channel order") {
    ImageBuffer img = synthetic_image(9, 7, 3, 2);
    std::string path = temp_path("rt.ppm");
    save_image(img, path);
    ImageBuffer back = load_image(path);
    CHECK(back.channels == 3);
    CHECK(back.width == 9);
    for (int c = 0; c < 3; ++c) {
        double q = std::lround(std::clamp(img.at(c, 3, 4), 0.0, 1.0) * 255.0) / 255.0;
        CHECK(back.at(c, 3, 4) == q);
    }
}

TEST_CASE("graymap byte scaling") {
    std::string path = temp_path("gray.pgm");
    std::ofstream out(path, std::ios::binary);
    out << "P5\n2 2\n255\n";
    unsigned char bytes[4] = {0, 128, 255, 64};
    out.write(reinterpret_cast<char*>(bytes), 4);
    out.close();
    ImageBuffer img = load_image(path);
    CHECK(img.at(0, 0, 0) == 0.0);
    CHECK(img.at(0, 0, 1) == doctest::Approx(128.0 / 255));
    CHECK(img.at(0, 1, 0) == 1.0);
    CHECK(img.at(0, 1, 1) == doctest::Approx(64.0 / 255));
}

TEST_CASE("malformed and truncated files are rejected") {
    std::string bad = temp_path("bad.pgm");
    std::ofstream(bad, std::ios::binary) << "P5\n10 zz\n255\n";
    CHECK_THROWS(load_image(bad));
    std::string trunc = temp_path("trunc.pgm");
    std::ofstream(trunc, std::ios::binary) << "P5\n4 4\n255\nab";
    CHECK_THROWS(load_image(trunc));
    std::string unknown = temp_path("unknown.bin");
    std::ofstream(unknown, std::ios::binary) << "XYZW";
    CHECK_THROWS(load_image(unknown));
}

TEST_CASE("png baseline decode") {
    // build a tiny PNG in-process with zlib-style stored blocks via save:
    // instead, verify against a hand-assembled file through the codec path
    // (encoder lives only in this test)
    ImageBuffer img = synthetic_image(13, 9, 3, 3);
    // quantize to bytes
    std::vector<unsigned char> px(13 * 9 * 3);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 13; ++x)
            for (int c = 0; c < 3; ++c)
                px[(y * 13 + x) * 3 + c] =
                    static_cast<unsigned char>(std::lround(std::clamp(img.at(c, y, x), 0.0, 1.0) * 255));

    // raw scanlines with filter 0
    std::vector<unsigned char> raw;
    for (int y = 0; y < 9; ++y) {
        raw.push_back(0);
        raw.insert(raw.end(), px.begin() + y * 13 * 3, px.begin() + (y + 1) * 13 * 3);
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> z(bound);
    REQUIRE(compress(z.data(), &bound, raw.data(), static_cast<uLong>(raw.size())) == Z_OK);
    z.resize(bound);

    auto be = [](uint32_t v) {
        return std::vector<unsigned char>{static_cast<unsigned char>(v >> 24),
                                          static_cast<unsigned char>(v >> 16),
                                          static_cast<unsigned char>(v >> 8),
                                          static_cast<unsigned char>(v)};
    };
    auto chunk = [&](const char* type, const std::vector<unsigned char>& payload) {
        std::vector<unsigned char> out = be(static_cast<uint32_t>(payload.size()));
        out.insert(out.end(), type, type + 4);
        out.insert(out.end(), payload.begin(), payload.end());
        uint32_t crc = crc32(crc32(0L, Z_NULL, 0), out.data() + 4, static_cast<uInt>(payload.size() + 4));
        auto c = be(crc);
        out.insert(out.end(), c.begin(), c.end());
        return out;
    };
    std::vector<unsigned char> file{137, 'P', 'N', 'G', 13, 10, 26, 10};
    std::vector<unsigned char> ihdr = be(13);
    {
        auto w = be(13), h = be(9);
        ihdr = w;
        ihdr.insert(ihdr.end(), h.begin(), h.end());
        ihdr.push_back(8); // bit depth
        ihdr.push_back(2); // RGB
        ihdr.push_back(0);
        ihdr.push_back(0);
        ihdr.push_back(0);
    }
    auto append = [&](const std::vector<unsigned char>& v) { file.insert(file.end(), v.begin(), v.end()); };
    append(chunk("IHDR", ihdr));
    append(chunk("IDAT", z));
    append(chunk("IEND", {}));

    std::string path = temp_path("t.png");
    std::ofstream(path, std::ios::binary)
        .write(reinterpret_cast<char*>(file.data()), static_cast<std::streamsize>(file.size()));

    ImageBuffer back = load_image(path);
    CHECK(back.width == 13);
    CHECK(back.height == 9);
    CHECK(back.channels == 3);
    bool equal = true;
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 13; ++x)
            for (int c = 0; c < 3; ++c)
                equal = equal && back.at(c, y, x) == px[(y * 13 + x) * 3 + c] / 255.0;
    CHECK(equal);

    // corrupt a payload byte: CRC must catch it
    file[60] ^= 0xFF;
    std::string badpath = temp_path("bad.png");
    std::ofstream(badpath, std::ios::binary)
        .write(reinterpret_cast<char*>(file.data()), static_cast<std::streamsize>(file.size()));
    CHECK_THROWS(load_image(badpath));
}

TEST_CASE("luma conversion closed forms") {
    ImageBuffer white(2, 2, 3, ColorSpace::rgb);
    for (double& v : white.data) v = 1.0;
    ImageBuffer y = rgb_to_y(white);
    CHECK(y.at(0, 0, 0) == doctest::Approx(235.0 / 255).epsilon(1e-12));

    ImageBuffer black(2, 2, 3, ColorSpace::rgb);
    ImageBuffer yb = rgb_to_y(black);
    CHECK(yb.at(0, 1, 1) == doctest::Approx(16.0 / 255).epsilon(1e-12));

    // gray ramp: affine in v
    double v1 = 0.25, v2 = 0.75;
    ImageBuffer g1(1, 1, 3, ColorSpace::rgb), g2(1, 1, 3, ColorSpace::rgb), gm(1, 1, 3, ColorSpace::rgb);
    for (int c = 0; c < 3; ++c) {
        g1.at(c, 0, 0) = v1;
        g2.at(c, 0, 0) = v2;
        gm.at(c, 0, 0) = 0.5 * (v1 + v2);
    }
    double ym = rgb_to_y(gm).at(0, 0, 0);
    CHECK(ym == doctest::Approx(0.5 * (rgb_to_y(g1).at(0, 0, 0) + rgb_to_y(g2).at(0, 0, 0))).epsilon(1e-12));

    ImageBuffer gray(2, 2, 1);
    CHECK_THROWS(rgb_to_y(gray));
}

TEST_CASE("bicubic identity, constancy and ramp preservation") {
    ImageBuffer img = synthetic_image(24, 16, 1, 4);
    ImageBuffer same = bicubic_resize(img, 1.0, true);
    CHECK(max_abs_image(same, img) == 0.0);

    ImageBuffer c(20, 20, 1);
    for (double& v : c.data) v = 0.37;
    for (double s : {0.25, 1.0 / 3.0, 0.5, 2.0, 3.0, 4.0}) {
        ImageBuffer r = bicubic_resize(c, s, true);
        for (double v : r.data) CHECK(std::fabs(v - 0.37) < 1e-12);
    }

    // horizontal linear ramp stays linear in the interior after x2 downscale
    ImageBuffer ramp(32, 8, 1);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 32; ++x) ramp.at(0, y, x) = x / 31.0;
    ImageBuffer down = bicubic_resize(ramp, 0.5, true);
    REQUIRE(down.width == 16);
    REQUIRE(down.height == 4);
    for (int x = 4; x < down.width - 4; ++x) {
        double expect = (2 * x + 0.5) / 31.0; // source coordinate of the output center
        CHECK(std::fabs(down.at(0, 2, x) - expect) < 1e-6);
    }

    CHECK_THROWS(bicubic_resize(ImageBuffer(1, 1, 1), 0.25, true)); // under one pixel
}

TEST_CASE("awgn statistics and determinism") {
    ImageBuffer base(1000, 1000, 1);
    for (double& v : base.data) v = 0.5;
    double sigma = 30.0;
    ImageBuffer noisy = add_awgn(base, sigma, 7);
    double mean = 0.0, var = 0.0;
    for (size_t i = 0; i < noisy.data.size(); ++i) {
        double d = noisy.data[i] - 0.5;
        mean += d;
        var += d * d;
    }
    mean /= static_cast<double>(noisy.data.size());
    var = var / static_cast<double>(noisy.data.size()) - mean * mean;
    CHECK(std::fabs(mean) < 0.5 / 255.0);
    CHECK(std::fabs(std::sqrt(var) - sigma / 255.0) < 0.01 * sigma / 255.0);

    ImageBuffer again = add_awgn(base, sigma, 7);
    CHECK(max_abs_image(noisy, again) == 0.0);
    ImageBuffer other = add_awgn(base, sigma, 8);
    CHECK(max_abs_image(noisy, other) > 0.0);
}

TEST_CASE("jpeg codec properties") {
    ImageBuffer img = synthetic_image(48, 48, 1, 5);

    // near-lossless at quality 100
    ImageBuffer q100 = jpeg_degrade(img, 100);
    CHECK(psnr(img, q100) > 40.0);

    // mid-gray constant block is exactly preserved (DC of 0 quantizes to 0)
    ImageBuffer mid(16, 16, 1);
    for (double& v : mid.data) v = 128.0 / 255.0;
    ImageBuffer midq = jpeg_degrade(mid, 10);
    CHECK(max_abs_image(mid, midq) == 0.0);
    // any constant stays constant (flat blocks cannot gain structure)
    ImageBuffer flat(16, 16, 1);
    for (double& v : flat.data) v = 0.41;
    ImageBuffer flatq = jpeg_degrade(flat, 10);
    for (double v : flatq.data) CHECK(v == flatq.data[0]);

    // lower quality hurts more
    double p10 = psnr(img, jpeg_degrade(img, 10));
    double p40 = psnr(img, jpeg_degrade(img, 40));
    CHECK(p10 < p40);

    // one re-encode at the same quality barely moves PSNR (aligned blocks)
    ImageBuffer once = jpeg_degrade(img, 20);
    ImageBuffer twice = jpeg_degrade(once, 20);
    CHECK(std::fabs(psnr(img, once) - psnr(img, twice)) < 1.0);

    CHECK_THROWS(jpeg_degrade(synthetic_image(8, 8, 3, 6), 10));
    CHECK_THROWS(jpeg_degrade(img, 0));
}

TEST_CASE("psnr closed forms") {
    ImageBuffer a(32, 32, 1);
    for (double& v : a.data) v = 0.5;
    ImageBuffer b = a;
    for (double& v : b.data) v += 16.0 / 255.0;
    CHECK(psnr(a, b) == doctest::Approx(20.0 * std::log10(255.0 / 16.0)).epsilon(1e-9));
    CHECK(std::isinf(psnr(a, a)));
    CHECK(psnr(a, b) == ref_psnr(a, b));
    CHECK_THROWS(psnr(a, ImageBuffer(16, 16, 1)));
}

TEST_CASE("ssim identity, symmetry and reference agreement") {
    ImageBuffer a = synthetic_image(40, 32, 1, 8);
    CHECK(ssim(a, a) == 1.0);
    ImageBuffer b = add_awgn(a, 20.0, 3);
    double sab = ssim(a, clip01(b));
    CHECK(sab == doctest::Approx(ssim(clip01(b), a)).epsilon(1e-12));
    CHECK(sab < 1.0);
    CHECK(sab == doctest::Approx(ref_ssim(a, b)).epsilon(1e-9));
}

TEST_CASE("golden corpus matches both the reference and the stored manifest") {
    std::string dir = source_dir() + "/tests/golden";
    std::ifstream manifest(dir + "/manifest.txt");
    REQUIRE(manifest.good());
    std::string name, metric;
    double expected;
    int rows = 0;
    while (manifest >> name >> metric >> expected) {
        ImageBuffer clean = load_image(dir + "/" + name + "_clean.pgm");
        ImageBuffer degraded = load_image(dir + "/" + name + "_degraded.pgm");
        if (metric == "psnr") {
            CHECK(std::fabs(psnr(clean, degraded) - expected) < 0.01);
            CHECK(std::fabs(ref_psnr(clean, degraded) - expected) < 0.01);
        } else if (metric == "ssim") {
            CHECK(std::fabs(ssim(clean, degraded) - expected) < 0.001);
            CHECK(std::fabs(ref_ssim(clean, degraded) - expected) < 0.001);
        } else {
            FAIL("unknown metric in manifest: " << metric);
        }
        ++rows;
    }
    CHECK(rows == 10); // 5 image pairs, two metrics each
}

TEST_CASE("dihedral transforms form a closed group of order 8") {
    ImageBuffer img = synthetic_image(11, 7, 1, 9);
    for (int t = 0; t < 8; ++t) {
        ImageBuffer once = dihedral_transform(img, t);
        ImageBuffer back = dihedral_transform(once, dihedral_inverse(t));
        REQUIRE(back.width == img.width);
        CHECK(max_abs_image(back, img) == 0.0);
    }
    // the eight transforms are pairwise distinct on an asymmetric image
    int distinct = 0;
    for (int t = 0; t < 8; ++t) {
        ImageBuffer a = dihedral_transform(img, t);
        bool unique = true;
        for (int u = 0; u < t; ++u) {
            ImageBuffer b = dihedral_transform(img, u);
            if (a.width == b.width && a.height == b.height && max_abs_image(a, b) == 0.0)
                unique = false;
        }
        distinct += unique;
    }
    CHECK(distinct == 8);
}

TEST_CASE("sample_batch alignment and determinism") {
    ImageBuffer img = synthetic_image(96, 80, 1, 10);
    PatchSampler sampler{24, 4, 5};

    DegradationSpec noise;
    noise.kind = DegradationSpec::Kind::awgn;
    noise.sigma255 = 30;
    noise.seed = 5;
    Batch b1 = sample_batch(img, noise, sampler, 3);
    CHECK(b1.lq.shape() == Shape{4, 1, 24, 24});
    CHECK(b1.hq.shape() == Shape{4, 1, 24, 24});
    // noise sits on top of the exact clean patch
    for (int64_t i = 0; i < b1.lq.numel(); ++i) {
        double d = b1.lq.data()[i] - b1.hq.data()[i];
        CHECK(std::fabs(d) < 1.0); // bounded noise, aligned patches
    }
    Batch b2 = sample_batch(img, noise, sampler, 3);
    CHECK(memcmp(b1.lq.data(), b2.lq.data(), sizeof(double) * b1.lq.numel()) == 0);
    Batch b3 = sample_batch(img, noise, sampler, 4);
    CHECK(memcmp(b1.lq.data(), b3.lq.data(), sizeof(double) * b1.lq.numel()) != 0);

    // SR: the LQ patch is exactly the bicubic downscale of the HQ patch
    ImageBuffer rgb = synthetic_image(128, 96, 3, 11);
    DegradationSpec sr;
    sr.kind = DegradationSpec::Kind::bicubic_down;
    sr.scale = 2;
    Batch sb = sample_batch(rgb, sr, sampler, 0);
    CHECK(sb.hq.shape() == Shape{4, 3, 48, 48});
    CHECK(sb.lq.shape() == Shape{4, 3, 24, 24});
    for (int slot = 0; slot < 4; ++slot) {
        ImageBuffer hq_patch = tensor_to_image(sb.hq, slot, ColorSpace::rgb);
        ImageBuffer lq_patch = tensor_to_image(sb.lq, slot, ColorSpace::rgb);
        ImageBuffer down = bicubic_resize(hq_patch, 0.5, true);
        CHECK(max_abs_image(down, lq_patch) < 1e-12);
    }

    ImageBuffer small = synthetic_image(20, 20, 1, 12);
    PatchSampler big{48, 2, 1};
    CHECK_THROWS(sample_batch(small, noise, big, 0));
}
