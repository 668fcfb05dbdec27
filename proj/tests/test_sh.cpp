#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "relight/rng.hpp"
#include "relight/sh.hpp"

using namespace relight;
using namespace relight::sh;

namespace {
Vec3 random_dir(std::mt19937_64& rng) { return uniform_sphere_dir(rng); }
}  // namespace

TEST_CASE("basis order 0 is the constant band") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 10; ++i) {
        auto b = eval_basis(random_dir(rng), 0);
        REQUIRE(b.size() == 1);
        CHECK(b[0] == doctest::Approx(0.28209479).epsilon(1e-7));
    }
}

TEST_CASE("basis at +z pole, order 1") {
    auto b = eval_basis(Vec3{0, 0, 1}, 1);
    REQUIRE(b.size() == 4);
    CHECK(b[sh_index(1, -1)] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(b[sh_index(1, 0)] == doctest::Approx(0.48860251).epsilon(1e-7));
    CHECK(b[sh_index(1, 1)] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("basis matches closed-form low bands") {
    // Hard-coded polynomial forms, the common graphics tables.
    std::mt19937_64 rng(11);
    for (int i = 0; i < 50; ++i) {
        Vec3 d = random_dir(rng);
        auto b = eval_basis(d, 2);
        CHECK(b[sh_index(1, -1)] == doctest::Approx(0.488603 * d.y).epsilon(1e-5));
        CHECK(b[sh_index(1, 0)] == doctest::Approx(0.488603 * d.z).epsilon(1e-5));
        CHECK(b[sh_index(1, 1)] == doctest::Approx(0.488603 * d.x).epsilon(1e-5));
        CHECK(b[sh_index(2, -2)] == doctest::Approx(1.092548 * d.x * d.y).epsilon(1e-5));
        CHECK(b[sh_index(2, -1)] == doctest::Approx(1.092548 * d.y * d.z).epsilon(1e-5));
        CHECK(b[sh_index(2, 0)] ==
              doctest::Approx(0.315392 * (3.0 * d.z * d.z - 1.0)).epsilon(1e-5));
        CHECK(b[sh_index(2, 1)] == doctest::Approx(1.092548 * d.x * d.z).epsilon(1e-5));
        CHECK(b[sh_index(2, 2)] ==
              doctest::Approx(0.546274 * (d.x * d.x - d.y * d.y)).epsilon(1e-5));
    }
}

TEST_CASE("non-unit direction is rejected") {
    CHECK_THROWS(eval_basis(Vec3{0.5, 0.0, 0.0}, 2));
}

TEST_CASE("Monte-Carlo Gram matrix is identity within 2e-2 for l <= 4") {
    const int order = 4;
    const int n = coeff_count(order);
    const std::size_t samples = 1000000;
    std::vector<double> gram(n * n, 0.0);
    std::vector<double> basis(n);
    std::mt19937_64 rng(123);
    for (std::size_t s = 0; s < samples; ++s) {
        eval_basis(random_dir(rng), order, basis.data());
        for (int j = 0; j < n; ++j)
            for (int k = j; k < n; ++k) gram[j * n + k] += basis[j] * basis[k];
    }
    double w = kFourPi / static_cast<double>(samples);
    for (int j = 0; j < n; ++j) {
        for (int k = j; k < n; ++k) {
            double g = gram[j * n + k] * w;
            CHECK(std::abs(g - (j == k ? 1.0 : 0.0)) < 2e-2);
        }
    }
}

TEST_CASE("Unsold sum rule holds to 1e-6 through order 10") {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 20; ++i) {
        auto b = eval_basis(random_dir(rng), 10);
        for (int l = 0; l <= 10; ++l) {
            double sum = 0.0;
            for (int m = -l; m <= l; ++m) sum += b[sh_index(l, m)] * b[sh_index(l, m)];
            CHECK(sum == doctest::Approx((2.0 * l + 1.0) / kFourPi).epsilon(1e-6));
        }
    }
}

TEST_CASE("radiance reconstruction identities") {
    ShVector constant(10);
    double c0 = 2.0 * std::sqrt(kPi);
    constant.coeffs[0] = Rgb{c0, c0, c0};
    ShVector zero(10);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 20; ++i) {
        Vec3 d = random_dir(rng);
        Rgb one = eval_radiance(constant, d);
        CHECK(one.r == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(one.g == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(one.b == doctest::Approx(1.0).epsilon(1e-12));
        Rgb z = eval_radiance(zero, d);
        CHECK(z.r == 0.0);
    }
}

TEST_CASE("project then evaluate reproduces a band-limited signal") {
    // Signal = Y_1^0 itself; projection must recover a single coefficient.
    auto fn = [](Vec3 d) {
        double y = eval_basis(d, 1)[sh_index(1, 0)];
        return Rgb{y, y, y};
    };
    ShVector sh = project_equirect(fn, 2, 256);
    CHECK(sh.at(1, 0).r == doctest::Approx(1.0).epsilon(1e-3));
    std::mt19937_64 rng(17);
    for (int i = 0; i < 20; ++i) {
        Vec3 d = random_dir(rng);
        CHECK(eval_radiance(sh, d).r == doctest::Approx(fn(d).r).epsilon(2e-3));
    }
}

TEST_CASE("equirect projection of the constant map") {
    auto fn = [](Vec3) { return Rgb{1, 1, 1}; };
    ShVector sh = project_equirect(fn, 4, 256);  // 512 x 256
    CHECK(sh.coeffs[0].r == doctest::Approx(3.5449077018110318).epsilon(1e-3 / 3.5));
    for (int k = 1; k < coeff_count(4); ++k) CHECK(std::abs(sh.coeffs[k].r) < 1e-3);
}

TEST_CASE("equirect projection of a Y_2^0 map") {
    auto fn = [](Vec3 d) {
        double y = eval_basis(d, 2)[sh_index(2, 0)];
        return Rgb{y, y, y};
    };
    ShVector sh = project_equirect(fn, 2, 256);
    for (int k = 0; k < coeff_count(2); ++k) {
        double expect = (k == sh_index(2, 0)) ? 1.0 : 0.0;
        CHECK(std::abs(sh.coeffs[k].r - expect) < 1e-2);
    }
}

TEST_CASE("hemisphere-masked constant map integrates to sqrt(pi)") {
    auto fn = [](Vec3 d) { return d.y > 0.0 ? Rgb{1, 1, 1} : Rgb{0, 0, 0}; };
    ShVector sh = project_equirect(fn, 0, 128);
    CHECK(sh.coeffs[0].r == doctest::Approx(std::sqrt(kPi)).epsilon(0.02));
}

TEST_CASE("Monte-Carlo projection agrees with Riemann projection") {
    auto fn = [](Vec3 d) { return Rgb{0.5 + 0.3 * d.x, 0.5, 0.5 - 0.2 * d.z}; };
    ShVector a = project_equirect(fn, 2, 256);
    ShVector b = project_montecarlo(fn, 2, 400000, 9);
    for (int k = 0; k < coeff_count(2); ++k) {
        CHECK(std::abs(a.coeffs[k].r - b.coeffs[k].r) < 2e-2);
        CHECK(std::abs(a.coeffs[k].b - b.coeffs[k].b) < 2e-2);
    }
}

TEST_CASE("zonal basis equals the m=0 column of the full basis") {
    std::mt19937_64 rng(77);
    for (int i = 0; i < 20; ++i) {
        Vec3 d = random_dir(rng);
        auto full = eval_basis(d, 8);
        double zonal[9];
        eval_zonal_basis(d.z, 8, zonal);
        for (int l = 0; l <= 8; ++l)
            CHECK(zonal[l] == doctest::Approx(full[sh_index(l, 0)]).epsilon(1e-12));
    }
}

TEST_CASE("clamped-cosine zonal projection matches the analytic convolution factors") {
    // c_l = sqrt((2l+1)/4pi) * A_l with A = (pi, 2pi/3, pi/4, 0, -pi/24).
    auto coeffs = project_zonal([](double t) { return t > 0.0 ? t : 0.0; }, 4, 1 << 16);
    const double a[5] = {kPi, kTwoPi / 3.0, kPi / 4.0, 0.0, -kPi / 24.0};
    for (int l = 0; l <= 4; ++l) {
        double expect = std::sqrt((2.0 * l + 1.0) / kFourPi) * a[l];
        CHECK(coeffs[l] == doctest::Approx(expect).epsilon(1e-4));
    }
}

TEST_CASE("rotation matches evaluation at the inverse-rotated direction") {
    std::mt19937_64 rng(19);
    ShVector f(6);
    for (auto& c : f.coeffs) c = Rgb{uniform_double(rng) - 0.5, uniform_double(rng) - 0.5, 0.1};
    for (int trial = 0; trial < 5; ++trial) {
        Mat3 rot = axis_angle_rotation(random_dir(rng), uniform_double(rng) * kTwoPi);
        ShRotation r(rot, 6);
        ShVector g = r.apply(f);
        for (int i = 0; i < 10; ++i) {
            Vec3 d = random_dir(rng);
            Rgb lhs = eval_radiance(g, d);
            Rgb rhs = eval_radiance(f, rot.transposed() * d);
            CHECK(lhs.r == doctest::Approx(rhs.r).epsilon(1e-9));
            CHECK(lhs.g == doctest::Approx(rhs.g).epsilon(1e-9));
        }
    }
}

TEST_CASE("rotation preserves per-band energy") {
    std::mt19937_64 rng(23);
    ShVector f(10);
    for (auto& c : f.coeffs) c = Rgb{uniform_double(rng) - 0.5, 0, 0};
    Mat3 rot = axis_angle_rotation(Vec3{1, 2, -1}, 1.234);
    ShVector g = ShRotation(rot, 10).apply(f);
    for (int l = 0; l <= 10; ++l) {
        double ef = 0.0, eg = 0.0;
        for (int m = -l; m <= l; ++m) {
            ef += f.at(l, m).r * f.at(l, m).r;
            eg += g.at(l, m).r * g.at(l, m).r;
        }
        CHECK(eg == doctest::Approx(ef).epsilon(1e-10));
    }
}

TEST_CASE("SH file round trip is exact") {
    std::mt19937_64 rng(41);
    ShVector f(10);
    for (auto& c : f.coeffs)
        c = Rgb{uniform_double(rng) * 2 - 1, uniform_double(rng) * 1e-7, uniform_double(rng) * 1e3};
    auto path = std::filesystem::temp_directory_path() / "relight_test_roundtrip.sh";
    save_sh(f, path);
    ShVector g = load_sh(path);
    REQUIRE(g.order == f.order);
    for (int k = 0; k < coeff_count(10); ++k) {
        CHECK(g.coeffs[k].r == f.coeffs[k].r);
        CHECK(g.coeffs[k].g == f.coeffs[k].g);
        CHECK(g.coeffs[k].b == f.coeffs[k].b);
    }
    std::filesystem::remove(path);
}
