#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>

#include "relight/envmap.hpp"
#include "relight/optim.hpp"
#include "relight/renderer.hpp"
#include "relight/scene.hpp"
#include "relight/sh.hpp"

namespace relight {

// Ground-truth material for synthetic fixtures: Lambert, or Lambert plus
// an energy-normalized Phong lobe.
struct AnalyticMaterial {
    enum class Kind { kLambert, kPhong };
    Kind kind = Kind::kLambert;
    Rgb diffuse_albedo{0.5, 0.5, 0.5};
    Rgb specular_albedo{0.0, 0.0, 0.0};
    double phong_exponent = 1.0;
    bool textured_diffuse = false;  // smooth procedural pattern over uv

    void validate() const;
};

// Distant illumination for the reference integrator: a band-limited SH
// function (reconstruction clamped at zero, matching the forward model)
// or an equirectangular panorama looked up at the nearest texel.
struct OracleLight {
    std::optional<sh::ShVector> sh;
    std::optional<EnvironmentMap> env;

    static OracleLight from_sh(sh::ShVector light) { return {std::move(light), std::nullopt}; }
    static OracleLight from_env(EnvironmentMap map) { return {std::nullopt, std::move(map)}; }

    Rgb eval(Vec3 dir) const;
    // Order-10 ground-truth coefficients (direct for SH, projected for maps).
    sh::ShVector to_sh(int order = 10) const;
};

struct SphereGeom {
    Vec3 center{0, 0, 0};
    double radius = 1.0;
};

// uv of a point on the sphere: u = phi / 2pi, v = theta / pi with theta
// from +Y; matches make_uv_sphere's parameterization.
Vec2 sphere_uv(Vec3 unit_normal);

Rgb oracle_diffuse_albedo(const AnalyticMaterial& material, Vec2 uv);

struct ReferenceOptions {
    int spp = 256;
    std::uint64_t seed = 0;
    bool analytic = false;   // exact Lambert irradiance convolution (order <= 2 SH only)
    bool occlusion = false;  // brute-force shadow rays (mesh geometry only)
};

// Direct-lighting reference integrator: cosine-weighted sampling for the
// diffuse term, Phong-lobe sampling for the specular term, no
// inter-reflection. Per-pixel RNG streams are seeded by (seed, pixel) so
// results do not depend on threading.
RadianceImage render_reference(const SphereGeom& sphere, const Camera& camera,
                               const AnalyticMaterial& material, const OracleLight& light,
                               const ReferenceOptions& options);
RadianceImage render_reference(const Mesh& mesh, const Camera& camera,
                               const AnalyticMaterial& material, const OracleLight& light,
                               const ReferenceOptions& options);

// UV sphere with exact normals; poles collapse to triangle fans.
Mesh make_uv_sphere(Vec3 center, double radius, int lat_segments, int lon_segments);

// Camera at `eye` looking at `target` (+Y up, +Y-down image convention).
Camera make_look_at_camera(int id, Vec3 eye, Vec3 target, int width, int height,
                           double focal_px);

struct SceneGenConfig {
    int view_count = 36;
    int resolution = 128;
    std::uint64_t seed = 1;
    SphereGeom sphere;
    double camera_distance = 3.2;
    double focal_scale = 0.9;  // focal_px = focal_scale * resolution
    int proxy_lat = 24;
    int proxy_lon = 48;
    AnalyticMaterial material;
    OracleLight light_a;
    OracleLight light_b;
    ReferenceOptions reference;
};

struct GeneratedScenes {
    SceneDataset scene_a;
    SceneDataset scene_b;
    sh::ShVector light_a_sh;
    sh::ShVector light_b_sh;
};

// Renders `view_count` seeded viewpoints of the analytic sphere under both
// illuminations, with exact coverage masks and a coarse UV-sphere proxy.
// Background pixels sample the light itself (black when it is pure SH
// with no panorama).
GeneratedScenes generate_scene(const SceneGenConfig& config);

// On-disk layout: root/a, root/b (scene-io format), root/light_a.sh,
// root/light_b.sh, root/truth.json.
void write_generated_scenes(const GeneratedScenes& scenes, const SceneGenConfig& config,
                            const std::filesystem::path& root);

// Band-limited illumination with seeded higher bands, strictly positive
// over the sphere (the amplitude shrinks until the minimum reconstruction
// clears 10% of the base).
sh::ShVector make_positive_light(int order, std::uint64_t seed, Rgb base, double amplitude);

// Small deterministic pipeline fixture for gradient checking: an 8x8 view
// of a coarse sphere, 8^2 textures, transport orders (2, 4), order-10
// light. Parameters are randomized away from every non-smooth point of
// the loss (albedo kink at 0.5, light clamp at 0, sign kinks of the l1
// terms), so central differences are valid at eps = 1e-4. Heap-allocated:
// the context holds pointers into the fixture.
struct FdFixture {
    Mesh mesh;
    Camera camera;
    GBuffer gbuffer;
    ViewImage view;
    ParameterSet params;
    ViewContext context;
    IlluminationLossContext illum_ctx;
    LossWeights weights;
    RenderOptions options;
};
std::unique_ptr<FdFixture> make_fd_fixture(std::uint64_t seed, int image_size = 8,
                                           int texture_res = 8, int l_d = 2, int l_s = 4);

}  // namespace relight
