#include <doctest.h>

#include <random>

#include "relight/error.hpp"
#include "relight/losses.hpp"
#include "relight/rng.hpp"

using namespace relight;

TEST_CASE("image loss basics") {
    ImageRgb a(4, 4, Rgb{0.5, 0.5, 0.5});
    ImageRgb b = a;
    MaskImage mask(4, 4, 1);
    CHECK(image_loss(a, b, mask) == 0.0);

    for (Rgb& p : b.data) p = p + Rgb{0.1, 0.1, 0.1};
    CHECK(image_loss(a, b, mask) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(image_loss(a, b, mask) == doctest::Approx(image_loss(b, a, mask)).epsilon(1e-15));

    // Masking out the only differing pixel zeroes the loss.
    b = a;
    b.at(2, 2) = Rgb{1, 1, 1};
    mask.at(2, 2) = 0;
    CHECK(image_loss(a, b, mask) == 0.0);

    MaskImage empty(4, 4, 0);
    CHECK_THROWS_AS(image_loss(a, b, empty), Error);
}

namespace {

TransportSamples one_pixel_transports(std::vector<Rgb> diffuse, std::vector<Rgb> specular) {
    TransportSamples t;
    t.pixels = {0};
    t.m_d = static_cast<int>(diffuse.size());
    t.m_s = static_cast<int>(specular.size());
    t.diffuse = std::move(diffuse);
    t.specular = std::move(specular);
    return t;
}

}  // namespace

TEST_CASE("chromaticity loss is zero for gray transports") {
    auto t = one_pixel_transports({Rgb{1, 1, 1}, Rgb{0.2, 0.2, 0.2}, Rgb{3, 3, 3}},
                                  {Rgb{0.5, 0.5, 0.5}, Rgb{0.1, 0.1, 0.1}});
    ImageRgb target(1, 1, Rgb{1, 1, 1});
    MaskImage mask(1, 1, 1);
    CHECK(chromaticity_loss(t, target, mask) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("chromaticity weight follows min(20 |I|, 1)") {
    // ||I|| = 0.01 -> w = 0.2. Two samples with orthogonal chromas give a
    // spread of (1 - cos45) per sample; the weighted per-component loss is
    // w * 0.29289.
    auto t = one_pixel_transports({Rgb{1, 0, 0}, Rgb{0, 1, 0}}, {});
    ImageRgb target(1, 1, Rgb{0.01, 0, 0});
    MaskImage mask(1, 1, 1);
    double expect = 0.2 * (1.0 - std::cos(kPi / 4.0));
    CHECK(chromaticity_loss(t, target, mask) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("orthogonal chromas at full weight give 1 - cos45") {
    auto t = one_pixel_transports({Rgb{1, 0, 0}, Rgb{0, 1, 0}}, {});
    ImageRgb target(1, 1, Rgb{1, 1, 1});  // w = 1
    MaskImage mask(1, 1, 1);
    CHECK(chromaticity_loss(t, target, mask) == doctest::Approx(0.29289321881345254).epsilon(1e-9));
}

TEST_CASE("chromaticity loss is invariant to positive per-sample scaling") {
    std::mt19937_64 rng(3);
    std::vector<Rgb> samples, scaled;
    for (int j = 0; j < 6; ++j) {
        Rgb t{0.2 + uniform_double(rng), 0.3 + uniform_double(rng), 0.1 + uniform_double(rng)};
        samples.push_back(t);
        scaled.push_back((0.1 + 5.0 * uniform_double(rng)) * t);
    }
    ImageRgb target(1, 1, Rgb{1, 1, 1});
    MaskImage mask(1, 1, 1);
    double a = chromaticity_loss(one_pixel_transports(samples, {}), target, mask);
    double b = chromaticity_loss(one_pixel_transports(scaled, {}), target, mask);
    CHECK(a == doctest::Approx(b).epsilon(1e-9));
}

TEST_CASE("near-zero transports contribute nothing") {
    auto with_zero = one_pixel_transports({Rgb{1, 0, 0}, Rgb{1e-12, 1e-12, 1e-12}, Rgb{0, 1, 0}}, {});
    auto without = one_pixel_transports({Rgb{1, 0, 0}, Rgb{0, 1, 0}}, {});
    ImageRgb target(1, 1, Rgb{1, 1, 1});
    MaskImage mask(1, 1, 1);
    // Means agree; the zero sample only changes the 1/m normalization.
    double a = chromaticity_loss(with_zero, target, mask) * 3.0;
    double b = chromaticity_loss(without, target, mask) * 2.0;
    CHECK(a == doctest::Approx(b).epsilon(1e-9));
}

TEST_CASE("illumination loss identities") {
    sh::ShIllumination illum;
    illum.current = sh::ShVector(10);
    std::mt19937_64 rng(5);
    for (auto& c : illum.current.coeffs)
        c = Rgb{uniform_double(rng), uniform_double(rng), uniform_double(rng)};
    illum.initial = illum.current;

    EnvironmentMap full(16);
    std::fill(full.coverage.data.begin(), full.coverage.data.end(), 1);

    std::size_t p = 0;
    CHECK(illumination_loss(illum, full, 4096, 1, &p) == 0.0);
    CHECK(p == 4096);  // full coverage keeps every sampled direction

    // Constant-band offset: delta per channel adds 3 * delta * Y_0.
    double delta = 0.25;
    illum.current.coeffs[0] += Rgb{delta, delta, delta};
    double loss = illumination_loss(illum, full, 4096, 1);
    CHECK(loss == doctest::Approx(3.0 * delta * 0.28209479177).epsilon(1e-9));
}

TEST_CASE("illumination loss with empty coverage is zero with p = 0") {
    sh::ShIllumination illum;
    illum.current = sh::ShVector(10);
    illum.initial = sh::ShVector(10);
    illum.current.coeffs[0] = Rgb{1, 1, 1};
    EnvironmentMap none(8);  // coverage all false
    std::size_t p = 99;
    CHECK(illumination_loss(illum, none, 512, 3, &p) == 0.0);
    CHECK(p == 0);
}

TEST_CASE("albedo loss identities") {
    MaterialTextures tex(8);
    std::fill(tex.rho_d.begin(), tex.rho_d.end(), Rgb{0.5, 0.5, 0.5});
    std::fill(tex.rho_s.begin(), tex.rho_s.end(), Rgb{0.5, 0.5, 0.5});
    CHECK(albedo_loss(tex) == 0.0);

    std::fill(tex.rho_d.begin(), tex.rho_d.end(), Rgb{0.7, 0.7, 0.7});
    CHECK(albedo_loss(tex) == doctest::Approx(0.6).epsilon(1e-12));

    // Resolution change with constant textures leaves the mean unchanged.
    MaterialTextures big(16);
    std::fill(big.rho_d.begin(), big.rho_d.end(), Rgb{0.7, 0.7, 0.7});
    std::fill(big.rho_s.begin(), big.rho_s.end(), Rgb{0.5, 0.5, 0.5});
    CHECK(albedo_loss(big) == doctest::Approx(albedo_loss(tex)).epsilon(1e-12));
}

TEST_CASE("total loss composition and NaN detection") {
    LossWeights weights;
    LossReport zero = total_loss(0, 0, 0, 0, weights);
    CHECK(zero.total == 0.0);
    LossReport ones = total_loss(1, 1, 1, 1, weights);
    CHECK(ones.total == doctest::Approx(4.0).epsilon(1e-15));

    LossWeights scaled{0.5, 2.0, 3.0};
    LossReport mixed = total_loss(1.0, 0.2, 0.3, 0.4, scaled);
    CHECK(mixed.total ==
          doctest::Approx(1.0 + 0.5 * 0.2 + 2.0 * 0.3 + 3.0 * 0.4).epsilon(1e-12));
    CHECK(std::abs(mixed.total - (mixed.im + scaled.lambda_chr * mixed.chr +
                                  scaled.lambda_illum * mixed.illum +
                                  scaled.lambda_alb * mixed.alb)) < 1e-9);

    double nan = std::nan("");
    CHECK_THROWS_WITH_AS(total_loss(nan, 0, 0, 0, weights), doctest::Contains("image"), Error);
    CHECK_THROWS_WITH_AS(total_loss(0, 0, nan, 0, weights), doctest::Contains("illumination"),
                         Error);
}
