#include <doctest.h>

#include <random>

#include "relight/oracle.hpp"
#include "relight/error.hpp"
#include "relight/rng.hpp"
#include "relight/sampling.hpp"
#include "test_util.hpp"

using namespace relight;

TEST_CASE("degenerate cone returns the axis") {
    Vec3 axis = normalized(Vec3{1, 2, 3});
    for (const Vec3& d : sample_cone_directions(axis, 0.0, 5, 0.3)) {
        CHECK(dot(d, axis) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("cone samples sit at exactly the half angle") {
    Vec3 axis{0, 0, 1};
    auto dirs = sample_cone_directions(axis, 20.0, 8, 0.0);
    REQUIRE(dirs.size() == 8);
    for (const Vec3& d : dirs) {
        CHECK(is_unit(d, 1e-12));
        CHECK(dot(d, axis) == doctest::Approx(0.9396926207859084).epsilon(1e-6));
    }
}

TEST_CASE("cone sampling is rotation-equivariant with the phase re-anchored") {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 10; ++trial) {
        Vec3 axis = uniform_sphere_dir(rng);
        double phase = uniform_double(rng) * kTwoPi;
        double half = 5.0 + 50.0 * uniform_double(rng);
        Mat3 rot = axis_angle_rotation(uniform_sphere_dir(rng), uniform_double(rng) * kTwoPi);

        auto base = sample_cone_directions(axis, half, 6, phase);
        Vec3 new_axis = rot * axis;
        // Anchor: azimuth of the rotated first sample in the new frame.
        Mat3 frame = orthonormal_frame(new_axis);
        Vec3 rotated0 = rot * base[0];
        Vec3 local{dot(rotated0, frame.col(0)), dot(rotated0, frame.col(1)),
                   dot(rotated0, frame.col(2))};
        double new_phase = std::atan2(local.y, local.x);

        auto rotated = sample_cone_directions(new_axis, half, 6, new_phase);
        for (std::size_t i = 0; i < rotated.size(); ++i) {
            Vec3 expect = rot * base[i];
            CHECK(rotated[i].x == doctest::Approx(expect.x).epsilon(1e-9));
            CHECK(rotated[i].y == doctest::Approx(expect.y).epsilon(1e-9));
            CHECK(rotated[i].z == doctest::Approx(expect.z).epsilon(1e-9));
        }
    }
}

namespace {
GBuffer sphere_gbuffer(int res = 32) {
    Mesh sphere = make_uv_sphere(Vec3{0, 0, 0}, 1.0, 16, 32);
    Camera cam = make_look_at_camera(0, Vec3{0.3, 0.5, -3.0}, Vec3{0, 0, 0}, res, res, 28.0);
    return rasterize(sphere, cam, compute_tangent_frames(sphere));
}
}  // namespace

TEST_CASE("default diffuse sampling counts and geometry") {
    GBuffer gb = sphere_gbuffer();
    SamplingConfig config;
    CHECK(config.diffuse_count() == 17);
    CHECK(config.specular_count() == 17);

    LightSampleSet set = sample_diffuse_dirs(gb, config);
    CHECK(set.m_d == 17);
    REQUIRE(set.diffuse_tangent.size() == gb.masked_pixels.size() * 17);
    for (std::size_t p = 0; p < set.pixels.size(); ++p) {
        for (int j = 0; j < set.m_d; ++j) {
            Vec3 d = set.diffuse_tangent[p * 17 + j];
            CHECK(is_unit(d, 1e-9));
            CHECK(d.z > 0.0);  // upper hemisphere for half-angles < 90
            bool on_ring = std::abs(d.z - std::cos(20.0 * kPi / 180.0)) < 1e-9 ||
                           std::abs(d.z - std::cos(40.0 * kPi / 180.0)) < 1e-9 ||
                           std::abs(d.z - 1.0) < 1e-9;
            CHECK(on_ring);
        }
    }
}

TEST_CASE("specular reflection identities") {
    GBuffer gb = sphere_gbuffer();
    SamplingConfig config;
    LightSampleSet set = make_light_samples(gb, config);
    auto halfways = specular_halfway_dirs(config);
    REQUIRE(set.m_s == static_cast<int>(halfways.size()));

    for (std::size_t p = 0; p < std::min<std::size_t>(64, set.pixels.size()); ++p) {
        TbnFrame frame = gb.frame_at(set.pixels[p]);
        Vec3 wo = frame.tangent_dir(gb.view_dir.data[set.pixels[p]]);
        for (int j = 0; j < set.m_s; ++j) {
            Vec3 wi = set.specular_tangent[p * set.m_s + j];
            CHECK(is_unit(wi, 1e-9));
            // Reflection preserves the half angle.
            CHECK(dot(wi, halfways[j]) == doctest::Approx(dot(wo, halfways[j])).epsilon(1e-6));
            // Axis halfway (= normal) mirrors the view direction.
            if (j == 0) {
                Vec3 mirror_local = frame.tangent_dir(set.mirror[p]);
                CHECK(wi.x == doctest::Approx(mirror_local.x).epsilon(1e-9));
                CHECK(wi.z == doctest::Approx(mirror_local.z).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("tangent_to_world maps +z to the pixel normal and preserves length") {
    GBuffer gb = sphere_gbuffer();
    SamplingConfig config;
    config.diffuse_half_angles = {0.0};  // all samples on the axis
    config.include_axis = false;
    LightSampleSet set = make_light_samples(gb, config);
    for (std::size_t p = 0; p < set.pixels.size(); ++p) {
        Vec3 n = gb.normal.data[set.pixels[p]];
        for (int j = 0; j < set.m_d; ++j) {
            Vec3 w = set.diffuse_world[p * set.m_d + j];
            CHECK(std::abs(length(w) - 1.0) < 1e-5);
            CHECK(dot(w, n) == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("identity frame leaves samples unchanged") {
    Mat3 identity = Mat3::identity();
    TbnFrame frame{identity.col(0), identity.col(1), identity.col(2)};
    std::mt19937_64 rng(8);
    for (int i = 0; i < 20; ++i) {
        Vec3 d = uniform_sphere_dir(rng);
        Vec3 w = frame.world_dir(d);
        CHECK(w.x == doctest::Approx(d.x).epsilon(1e-15));
        CHECK(w.y == doctest::Approx(d.y).epsilon(1e-15));
        CHECK(w.z == doctest::Approx(d.z).epsilon(1e-15));
    }
}

TEST_CASE("sample sets are deterministic functions of the config") {
    GBuffer gb = sphere_gbuffer();
    SamplingConfig config;
    LightSampleSet a = make_light_samples(gb, config);
    LightSampleSet b = make_light_samples(gb, config);
    REQUIRE(a.diffuse_world.size() == b.diffuse_world.size());
    for (std::size_t i = 0; i < a.diffuse_world.size(); ++i) {
        CHECK(a.diffuse_world[i].x == b.diffuse_world[i].x);
    }
    for (std::size_t i = 0; i < a.specular_world.size(); ++i) {
        CHECK(a.specular_world[i].z == b.specular_world[i].z);
    }
}

TEST_CASE("fibonacci directions integrate low-order SH accurately") {
    auto dirs = uniform_sphere_fibonacci(4096, 3);
    double w = kFourPi / 4096.0;
    // Integral of Y_2^0 over the sphere is zero; of Y_0 is 2 sqrt(pi).
    double sum0 = 0.0, sum2 = 0.0;
    for (const Vec3& d : dirs) {
        auto b = sh::eval_basis(d, 2);
        sum0 += w * b[0];
        sum2 += w * b[sh::sh_index(2, 0)];
    }
    CHECK(sum0 == doctest::Approx(2.0 * std::sqrt(kPi)).epsilon(1e-6));
    CHECK(std::abs(sum2) < 1e-4);
}

TEST_CASE("config validation") {
    SamplingConfig config;
    config.diffuse_half_angles = {95.0};
    CHECK_THROWS_AS(config.validate(), Error);
    config = SamplingConfig{};
    config.samples_per_cone = 0;
    CHECK_THROWS_AS(config.validate(), Error);
}
