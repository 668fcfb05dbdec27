#include <doctest.h>

#include <random>

#include "relight/error.hpp"
#include "relight/image.hpp"
#include "relight/rng.hpp"
#include "test_util.hpp"

using namespace relight;

// Out of line so the optimizer cannot elide the float rounding.
__attribute__((noinline)) static double round_f32(double v) {
    volatile float f = static_cast<float>(v);
    return f;
}

TEST_CASE("PFM round trip preserves float32 values exactly") {
    testutil::TempDir dir("pfm");
    ImageRgb img(7, 5);
    std::mt19937_64 rng(3);
    for (Rgb& p : img.data) {
        p = Rgb{uniform_double(rng) * 10.0, -uniform_double(rng), uniform_double(rng) * 1e-4};
        // Store float32-representable values so the round trip is exact.
        p = Rgb{round_f32(p.r), round_f32(p.g), round_f32(p.b)};
    }
    auto path = dir.path() / "test.pfm";
    write_pfm(path, img);
    ImageRgb back = read_pfm(path);
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    for (std::size_t i = 0; i < img.size(); ++i) {
        CHECK(back.data[i].r == img.data[i].r);
        CHECK(back.data[i].g == img.data[i].g);
        CHECK(back.data[i].b == img.data[i].b);
    }
}

TEST_CASE("PNG round trip at 8-bit precision") {
    testutil::TempDir dir("png");
    ImageRgb img(9, 4);
    std::mt19937_64 rng(5);
    for (Rgb& p : img.data) p = Rgb{uniform_double(rng), uniform_double(rng), uniform_double(rng)};
    auto path = dir.path() / "test.png";
    write_png_rgb(path, img, /*srgb_encode=*/false);
    ImageRgb back = read_png_rgb(path, /*srgb_decode=*/false);
    REQUIRE(back.width == img.width);
    for (std::size_t i = 0; i < img.size(); ++i) {
        CHECK(back.data[i].r == doctest::Approx(img.data[i].r).epsilon(1.0 / 255.0));
    }
}

TEST_CASE("mask PNG thresholds at 128") {
    testutil::TempDir dir("mask");
    MaskImage mask(4, 3, 0);
    mask.at(1, 1) = 1;
    mask.at(3, 2) = 1;
    auto path = dir.path() / "mask.png";
    write_png_gray(path, mask);
    MaskImage back = read_png_mask(path);
    for (std::size_t i = 0; i < mask.size(); ++i) CHECK(back.data[i] == mask.data[i]);
}

TEST_CASE("sRGB transfer round trip") {
    for (double v : {0.0, 0.001, 0.04, 0.2, 0.5, 0.99, 1.0}) {
        CHECK(srgb_to_linear(linear_to_srgb(v)) == doctest::Approx(v).epsilon(1e-10));
    }
}

TEST_CASE("missing files raise errors naming the path") {
    CHECK_THROWS_WITH_AS(read_pfm("/nonexistent/foo.pfm"),
                         doctest::Contains("/nonexistent/foo.pfm"), Error);
    CHECK_THROWS_AS(read_png("/nonexistent/foo.png"), Error);
}
