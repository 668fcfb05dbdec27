#include <doctest.h>

#include "relight/oracle.hpp"
#include "relight/raster.hpp"
#include "test_util.hpp"

using namespace relight;

TEST_CASE("quad tangents follow the uv gradient") {
    Mesh quad = testutil::make_quad();
    TangentBasis basis = compute_tangent_frames(quad);
    REQUIRE(basis.tangents.size() == 4);
    CHECK(basis.fallback_count == 0);
    for (const Vec3& t : basis.tangents) {
        CHECK(t.x == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(t.y == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(t.z == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("rotating the uv mapping by 90 degrees rotates the tangent") {
    Mesh quad = testutil::make_quad();
    // uv' = (v, 1-u): du now runs along +y in object space.
    for (auto& fuv : quad.face_uvs) {
        for (Vec2& t : fuv) t = Vec2{t.y, 1.0 - t.x};
    }
    TangentBasis basis = compute_tangent_frames(quad);
    for (const Vec3& t : basis.tangents) {
        CHECK(std::abs(t.x) < 1e-9);
        CHECK(t.y == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("sphere tangent frames are orthonormal") {
    Mesh sphere = make_uv_sphere(Vec3{0, 0, 0}, 1.0, 16, 32);
    TangentBasis basis = compute_tangent_frames(sphere);
    for (std::size_t i = 0; i < sphere.vertices.size(); ++i) {
        Vec3 n = sphere.normals[i];
        Vec3 t = basis.tangents[i];
        Vec3 b = cross(n, t);
        CHECK(std::abs(length(t) - 1.0) < 1e-4);
        CHECK(std::abs(dot(t, n)) < 1e-4);
        Mat3 frame = Mat3::from_columns(t, b, n);
        CHECK(frame.det() == doctest::Approx(1.0).epsilon(1e-4));
    }
}

TEST_CASE("full-screen quad rasterizes with linear uv") {
    Mesh quad = testutil::make_quad(2.0);  // oversized: covers the frame
    Camera cam = testutil::make_quad_camera(0, 32, 2.0, 24.0);
    GBuffer gb = rasterize(quad, cam, compute_tangent_frames(quad));

    std::size_t covered = gb.masked_pixels.size();
    CHECK(covered == 32u * 32u);
    // The quad faces +z and the camera sits on +z: normals face the camera.
    for (std::uint32_t pixel : gb.masked_pixels) {
        CHECK(gb.normal.data[pixel].z == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(dot(gb.normal.data[pixel], gb.view_dir.data[pixel]) > 0.0);
    }
    // uv varies linearly; check a horizontal scan at mid-height.
    Vec2 uv_left = gb.uv.at(2, 16);
    Vec2 uv_mid = gb.uv.at(16, 16);
    Vec2 uv_right = gb.uv.at(30, 16);
    CHECK(uv_mid.x == doctest::Approx(0.5 * (uv_left.x + uv_right.x)).epsilon(1e-6));
    CHECK(uv_left.x < uv_right.x);
}

TEST_CASE("perspective-correct uv matches the analytic ray-plane intersection") {
    Mesh quad = testutil::make_quad(1.0);
    // Oblique view.
    Camera cam = make_look_at_camera(0, Vec3{1.2, 0.8, -2.0}, Vec3{0, 0, 0}, 48, 48, 40.0);
    GBuffer gb = rasterize(quad, cam, compute_tangent_frames(quad));
    REQUIRE(gb.masked_pixels.size() > 100);
    Vec3 origin = cam.center();
    for (std::uint32_t pixel : gb.masked_pixels) {
        int x = static_cast<int>(pixel) % gb.width;
        int y = static_cast<int>(pixel) / gb.width;
        Vec3 dir = cam.ray_dir(x + 0.5, y + 0.5);
        double t = -origin.z / dir.z;  // quad plane z = 0
        Vec3 p = origin + t * dir;
        // Quad uv: u = (x+1)/2, v = (y+1)/2 by the fixture mapping.
        CHECK(gb.uv.data[pixel].x == doctest::Approx((p.x + 1.0) / 2.0).epsilon(1e-3));
        CHECK(gb.uv.data[pixel].y == doctest::Approx((p.y + 1.0) / 2.0).epsilon(1e-3));
    }
}

TEST_CASE("depth test keeps the nearer quad") {
    Mesh near_quad = testutil::make_quad(0.5, 0.5);  // closer to the +z camera
    Mesh far_quad = testutil::make_quad(0.5, -0.5);
    Mesh merged = near_quad;
    int base = static_cast<int>(merged.vertices.size());
    for (const Vec3& v : far_quad.vertices) merged.vertices.push_back(v);
    for (const Vec3& n : far_quad.normals) merged.normals.push_back(n);
    for (auto f : far_quad.faces) {
        merged.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
    }
    for (auto uv : far_quad.face_uvs) merged.face_uvs.push_back(uv);

    Camera cam = testutil::make_quad_camera(0, 32, 2.0, 40.0);
    GBuffer gb = rasterize(merged, cam, compute_tangent_frames(merged));
    REQUIRE(gb.masked_pixels.size() > 0);
    for (std::uint32_t pixel : gb.masked_pixels) {
        // Camera at z=+2: near quad plane z=+0.5 is at depth 1.5.
        CHECK(gb.depth.data[pixel] == doctest::Approx(1.5).epsilon(1e-9));
    }
}

TEST_CASE("sphere raster: front-facing and orthonormal frames at every pixel") {
    Mesh sphere = make_uv_sphere(Vec3{0, 0, 0}, 1.0, 24, 48);
    Camera cam = make_look_at_camera(0, Vec3{0.5, 0.4, -3.0}, Vec3{0, 0, 0}, 64, 64, 60.0);
    GBuffer gb = rasterize(sphere, cam, compute_tangent_frames(sphere));
    REQUIRE(gb.masked_pixels.size() > 200);
    std::size_t backfacing = 0;
    for (std::uint32_t pixel : gb.masked_pixels) {
        double facing = dot(gb.normal.data[pixel], gb.view_dir.data[pixel]);
        // Interpolated proxy normals can graze past perpendicular right at
        // the silhouette; everywhere else convexity keeps them front-facing.
        CHECK(facing > -0.05);
        if (facing <= 0.0) ++backfacing;
        TbnFrame frame = gb.frame_at(pixel);
        Mat3 m = frame.to_world();
        CHECK(std::abs(m.det() - 1.0) < 1e-4);
        CHECK(std::abs(dot(frame.tangent, frame.normal)) < 1e-4);
        CHECK(std::abs(length(frame.tangent) - 1.0) < 1e-4);
        CHECK(std::abs(length(frame.normal) - 1.0) < 1e-4);
    }
    CHECK(backfacing < gb.masked_pixels.size() / 100);
}

TEST_CASE("sphere mask matches the analytic silhouette within one pixel") {
    SphereGeom sphere{Vec3{0, 0, 0}, 1.0};
    Mesh proxy = make_uv_sphere(sphere.center, sphere.radius, 32, 64);
    Camera cam = make_look_at_camera(0, Vec3{0, 0.2, -3.2}, Vec3{0, 0, 0}, 96, 96, 80.0);
    GBuffer gb = rasterize(proxy, cam, compute_tangent_frames(proxy));
    Vec3 origin = cam.center();
    int disagreements = 0;
    for (int y = 0; y < 96; ++y) {
        for (int x = 0; x < 96; ++x) {
            Vec3 dir = cam.ray_dir(x + 0.5, y + 0.5);
            Vec3 oc = origin - sphere.center;
            double b = dot(oc, dir);
            double disc = b * b - (dot(oc, oc) - 1.0);
            bool analytic = disc > 0.0 && (-b - std::sqrt(disc)) > 0.0;
            bool raster = gb.mask.at(x, y) != 0;
            if (analytic != raster) {
                // Allowed only within a 1-pixel band of the silhouette:
                // a neighbor must disagree in coverage.
                bool boundary = false;
                for (int dy = -1; dy <= 1 && !boundary; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        int nx = x + dx, ny = y + dy;
                        if (nx < 0 || ny < 0 || nx >= 96 || ny >= 96) continue;
                        if ((gb.mask.at(nx, ny) != 0) != raster) {
                            boundary = true;
                            break;
                        }
                    }
                }
                CHECK(boundary);
                ++disagreements;
            }
        }
    }
    // Mismatches confined to a thin band.
    CHECK(disagreements < 96 * 4);
}

TEST_CASE("empty coverage yields an all-false mask") {
    Mesh quad = testutil::make_quad(0.1);
    // Camera looking away from the quad.
    Camera cam = make_look_at_camera(0, Vec3{0, 0, -2}, Vec3{0, 0, -4}, 16, 16, 16.0);
    GBuffer gb = rasterize(quad, cam, compute_tangent_frames(quad));
    CHECK(gb.masked_pixels.empty());
}

TEST_CASE("G-buffer cache round trip") {
    testutil::TempDir dir("gbuf");
    Mesh sphere = make_uv_sphere(Vec3{0, 0, 0}, 1.0, 12, 24);
    Camera cam = make_look_at_camera(3, Vec3{0, 0, -3}, Vec3{0, 0, 0}, 24, 24, 20.0);
    TangentBasis tangents = compute_tangent_frames(sphere);
    GBuffer gb = rasterize_cached(sphere, cam, tangents, dir.path());
    auto cache_file = gbuffer_cache_path(dir.path(), mesh_content_hash(sphere), cam);
    CHECK(std::filesystem::exists(cache_file));
    GBuffer cached = rasterize_cached(sphere, cam, tangents, dir.path());
    REQUIRE(cached.masked_pixels.size() == gb.masked_pixels.size());
    for (std::size_t i = 0; i < gb.mask.size(); ++i) {
        CHECK(cached.mask.data[i] == gb.mask.data[i]);
        CHECK(cached.depth.data[i] == gb.depth.data[i]);
        CHECK(cached.normal.data[i].x == gb.normal.data[i].x);
    }
}
