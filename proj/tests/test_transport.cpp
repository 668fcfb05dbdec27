#include <doctest.h>

#include <random>

#include "relight/error.hpp"
#include "relight/rng.hpp"
#include "relight/transport.hpp"

using namespace relight;

TEST_CASE("bilinear lookup at texel centers and midpoints") {
    int res = 4;
    std::vector<Rgb> tex(16);
    for (int i = 0; i < 16; ++i) tex[i] = Rgb{i * 0.1, 0, 0};

    // Exact texel center (1,2): uv = ((1+0.5)/4, (2+0.5)/4).
    BilinearFootprint fp = bilinear_footprint(res, Vec2{1.5 / 4.0, 2.5 / 4.0});
    double w_at_texel = 0.0;
    for (int i = 0; i < 4; ++i) {
        if (fp.texel[i] == 2u * 4u + 1u) w_at_texel += fp.weight[i];
    }
    CHECK(w_at_texel == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sample_bilinear(tex, fp).r == doctest::Approx(0.9).epsilon(1e-12));

    // Midway between texels (0,0)=0.0 and (1,0)=0.1 with values 0.2/0.6 scaled:
    tex[0] = Rgb{0.2, 0, 0};
    tex[1] = Rgb{0.6, 0, 0};
    Rgb mid = sample_texture(tex, res, Vec2{1.0 / 4.0, 0.5 / 4.0});
    CHECK(mid.r == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("bilinear weights always sum to one") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 200; ++i) {
        BilinearFootprint fp = bilinear_footprint(16, Vec2{uniform_double(rng), uniform_double(rng)});
        CHECK(fp.weight[0] + fp.weight[1] + fp.weight[2] + fp.weight[3] ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("uv outside the unit square is rejected") {
    CHECK_THROWS_AS(bilinear_footprint(8, Vec2{1.2, 0.5}), Error);
}

TEST_CASE("initial diffuse transport is a band-limited clamped cosine") {
    InitialParameters init = init_parameters(8, 4, 8);
    std::vector<Vec3> up{Vec3{0, 0, 1}};
    Rgb at_peak = eval_diffuse_transport(init.field, Vec2{0.5, 0.5}, up)[0];
    CHECK(std::abs(at_peak.r - 1.0) < 0.05);  // ringing tolerance

    // Zero at 90 degrees within ringing.
    std::vector<Vec3> side{Vec3{1, 0, 0}};
    Rgb at_side = eval_diffuse_transport(init.field, Vec2{0.5, 0.5}, side)[0];
    CHECK(std::abs(at_side.r) < 0.15);
}

TEST_CASE("initial specular transport peaks at 0.05") {
    InitialParameters init = init_parameters(8, 4, 8);
    Vec3 normal{0, 0, 1};
    Vec3 view{0, 0, 1};
    std::vector<Vec3> mirror{Vec3{0, 0, 1}};  // omega_i = r
    Rgb peak = eval_specular_transport(init.field, Vec2{0.5, 0.5}, mirror, normal, view)[0];
    CHECK(peak.r == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(peak.g == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("init is reproducible bit for bit") {
    InitialParameters a = init_parameters(8, 4, 8);
    InitialParameters b = init_parameters(8, 4, 8);
    CHECK(a.field.t_d == b.field.t_d);
    CHECK(a.field.t_s == b.field.t_s);
    for (std::size_t i = 0; i < a.textures.rho_d.size(); ++i) {
        CHECK(a.textures.rho_d[i].r == 0.5);
        CHECK(a.textures.rho_s[i].b == 0.5);
    }
}

TEST_CASE("all-zero field evaluates to zero") {
    TransportField field(4, 2, 4);
    std::vector<Vec3> dirs{Vec3{0, 0, 1}, normalized(Vec3{1, 1, 1})};
    for (Rgb v : eval_diffuse_transport(field, Vec2{0.3, 0.7}, dirs)) {
        CHECK(v.r == 0.0);
        CHECK(v.g == 0.0);
    }
}

TEST_CASE("diffuse transport evaluation is a pure function") {
    InitialParameters init = init_parameters(8, 4, 8);
    std::vector<Vec3> dirs{normalized(Vec3{0.3, -0.2, 0.9})};
    Rgb a = eval_diffuse_transport(init.field, Vec2{0.25, 0.75}, dirs)[0];
    Rgb b = eval_diffuse_transport(init.field, Vec2{0.25, 0.75}, dirs)[0];
    CHECK(a.r == b.r);
    CHECK(a.g == b.g);
    CHECK(a.b == b.b);
}

TEST_CASE("zonal projection of a Phong lobe reconstructs the peak within 5%") {
    // Order 8 resolves lobes up to roughly cos^12; sharper exponents ring.
    const double n = 8.0;
    auto coeffs = sh::project_zonal([n](double t) { return t > 0.0 ? std::pow(t, n) : 0.0; }, 8,
                                    1 << 16);
    double zonal[9];
    sh::eval_zonal_basis(1.0, 8, zonal);
    double recon = 0.0;
    for (int l = 0; l <= 8; ++l) recon += coeffs[l] * zonal[l];
    CHECK(std::abs(recon - 1.0) < 0.05);
}

TEST_CASE("specular transport evaluation matches the 1-D quadrature oracle") {
    // Field loaded with the zonal projection of cos^32; evaluation at the
    // lobe peak must equal the oracle's band-limited value (0.714 at order
    // 8; the unclipped lobe is NOT recoverable at this order).
    const double n = 32.0;
    auto coeffs = sh::project_zonal([n](double t) { return t > 0.0 ? std::pow(t, n) : 0.0; }, 8,
                                    1 << 16);
    TransportField field(4, 2, 8);
    for (std::size_t texel = 0; texel < field.texel_count(); ++texel) {
        for (int c = 0; c < 3; ++c) {
            double* s = field.specular_at(texel, c);
            for (int l = 0; l <= 8; ++l) s[l] = coeffs[l];
        }
    }
    double zonal[9];
    sh::eval_zonal_basis(1.0, 8, zonal);
    double oracle = 0.0;
    for (int l = 0; l <= 8; ++l) oracle += coeffs[l] * zonal[l];

    Vec3 axis{0, 0, 1};
    Rgb peak = eval_specular_transport(field, Vec2{0.5, 0.5}, {axis}, axis, axis)[0];
    CHECK(peak.r == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(oracle == doctest::Approx(0.714).epsilon(0.01));
}

TEST_CASE("specular transport is isotropic: joint rotation leaves it unchanged") {
    InitialParameters init = init_parameters(8, 4, 8);
    // Make the specular coefficients spatially varying to rule out trivial
    // invariance.
    std::mt19937_64 rng(31);
    for (double& v : init.field.t_s) v *= 0.5 + uniform_double(rng);

    Vec3 normal = normalized(Vec3{0.2, 0.9, 0.1});
    Vec3 view = normalized(Vec3{-0.3, 0.8, 0.5});
    std::vector<Vec3> dirs{normalized(Vec3{0.1, 0.7, -0.2}), normalized(Vec3{-0.5, 0.5, 0.5})};
    auto base = eval_specular_transport(init.field, Vec2{0.4, 0.6}, dirs, normal, view);

    Mat3 rot = axis_angle_rotation(Vec3{1, -2, 0.5}, 1.17);
    std::vector<Vec3> rdirs;
    for (const Vec3& d : dirs) rdirs.push_back(rot * d);
    auto rotated =
        eval_specular_transport(init.field, Vec2{0.4, 0.6}, rdirs, rot * normal, rot * view);
    for (std::size_t i = 0; i < base.size(); ++i) {
        CHECK(rotated[i].r == doctest::Approx(base[i].r).epsilon(1e-9));
        CHECK(rotated[i].g == doctest::Approx(base[i].g).epsilon(1e-9));
    }
}

TEST_CASE("interpolation commutes with SH evaluation") {
    TransportField field(4, 3, 4);
    std::mt19937_64 rng(17);
    for (double& v : field.t_d) v = uniform_double(rng) - 0.5;

    Vec2 uv{0.37, 0.58};
    Vec3 dir = normalized(Vec3{0.4, -0.1, 0.9});
    // interpolate-then-evaluate
    Rgb a = eval_diffuse_transport(field, uv, {dir})[0];
    // evaluate-then-interpolate
    BilinearFootprint fp = bilinear_footprint(field.resolution, uv);
    auto basis = sh::eval_basis(dir, field.diffuse_order);
    Rgb b;
    for (int i = 0; i < 4; ++i) {
        for (int c = 0; c < 3; ++c) {
            const double* coeffs = field.diffuse_at(fp.texel[i], c);
            double v = 0.0;
            for (int k = 0; k < field.diffuse_coeffs(); ++k) v += coeffs[k] * basis[k];
            b[c] += fp.weight[i] * v;
        }
    }
    CHECK(a.r == doctest::Approx(b.r).epsilon(1e-6));
    CHECK(a.g == doctest::Approx(b.g).epsilon(1e-6));
}

TEST_CASE("softplus reparameterization keeps transport positive") {
    TransportField field(4, 2, 4);
    field.softplus = true;
    std::mt19937_64 rng(5);
    for (double& v : field.t_d) v = 2.0 * (uniform_double(rng) - 0.5);
    std::vector<Vec3> dirs{Vec3{0, 0, 1}, normalized(Vec3{-0.6, 0.3, 0.74})};
    for (Rgb v : eval_diffuse_transport(field, Vec2{0.5, 0.5}, dirs)) {
        CHECK(v.r > 0.0);
        CHECK(v.g > 0.0);
        CHECK(v.b > 0.0);
    }
}
