#include "relight/oracle.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "relight/error.hpp"
#include "relight/parallel.hpp"
#include "relight/rng.hpp"

namespace relight {

void AnalyticMaterial::validate() const {
    auto in01 = [](Rgb c) {
        return c.r >= 0 && c.r <= 1 && c.g >= 0 && c.g <= 1 && c.b >= 0 && c.b <= 1;
    };
    require(in01(diffuse_albedo), "diffuse albedo out of [0,1]");
    require(in01(specular_albedo), "specular albedo out of [0,1]");
    require(phong_exponent >= 1.0, "phong exponent must be >= 1");
}

Rgb OracleLight::eval(Vec3 dir) const {
    if (sh) return max0(sh::eval_radiance(*sh, dir));
    if (env) return env->nearest(dir);
    fail("OracleLight is empty");
}

sh::ShVector OracleLight::to_sh(int order) const {
    if (sh) {
        sh::ShVector out(order);
        int n = std::min(out.coeffs.size(), sh->coeffs.size());
        for (int k = 0; k < n; ++k) out.coeffs[k] = sh->coeffs[k];
        return out;
    }
    if (env) {
        const EnvironmentMap& map = *env;
        return sh::project_equirect([&map](Vec3 d) { return map.nearest(d); }, order, map.height);
    }
    fail("OracleLight is empty");
}

Vec2 sphere_uv(Vec3 n) {
    double theta = std::acos(std::clamp(n.y, -1.0, 1.0));
    double phi = std::atan2(n.z, n.x);
    if (phi < 0.0) phi += kTwoPi;
    double u = phi / kTwoPi;
    if (u >= 1.0) u = 0.0;
    return {u, theta / kPi};
}

Rgb oracle_diffuse_albedo(const AnalyticMaterial& material, Vec2 uv) {
    if (!material.textured_diffuse) return material.diffuse_albedo;
    // Smooth low-frequency pattern, bounded in (0, 1).
    double s = 0.75 + 0.25 * std::sin(kTwoPi * 3.0 * uv.x) * std::sin(kTwoPi * 2.0 * uv.y);
    return s * material.diffuse_albedo;
}

// ---------------------------------------------------------------------------
// Reference integrator

namespace {

struct Hit {
    bool valid = false;
    Vec3 position;
    Vec3 normal;
    Vec2 uv;
};

Hit intersect_sphere(const SphereGeom& sphere, Vec3 origin, Vec3 dir) {
    Hit hit;
    Vec3 oc = origin - sphere.center;
    double b = dot(oc, dir);
    double c = dot(oc, oc) - sphere.radius * sphere.radius;
    double disc = b * b - c;
    if (disc < 0.0) return hit;
    double t = -b - std::sqrt(disc);
    if (t <= 1e-9) return hit;
    hit.valid = true;
    hit.position = origin + t * dir;
    hit.normal = normalized(hit.position - sphere.center);
    hit.uv = sphere_uv(hit.normal);
    return hit;
}

struct MeshHit {
    bool valid = false;
    double t = 0.0;
    std::size_t face = 0;
    double b1 = 0.0, b2 = 0.0;
};

bool ray_triangle(Vec3 origin, Vec3 dir, Vec3 p0, Vec3 p1, Vec3 p2, double& t, double& b1,
                  double& b2) {
    Vec3 e1 = p1 - p0, e2 = p2 - p0;
    Vec3 pv = cross(dir, e2);
    double det = dot(e1, pv);
    if (std::abs(det) < 1e-14) return false;
    double inv = 1.0 / det;
    Vec3 tv = origin - p0;
    b1 = dot(tv, pv) * inv;
    if (b1 < 0.0 || b1 > 1.0) return false;
    Vec3 qv = cross(tv, e1);
    b2 = dot(dir, qv) * inv;
    if (b2 < 0.0 || b1 + b2 > 1.0) return false;
    t = dot(e2, qv) * inv;
    return t > 1e-9;
}

MeshHit intersect_mesh(const Mesh& mesh, Vec3 origin, Vec3 dir, double max_t = 1e30) {
    MeshHit best;
    best.t = max_t;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& face = mesh.faces[f];
        double t, b1, b2;
        if (ray_triangle(origin, dir, mesh.vertices[face[0]], mesh.vertices[face[1]],
                         mesh.vertices[face[2]], t, b1, b2) &&
            t < best.t) {
            best.valid = true;
            best.t = t;
            best.face = f;
            best.b1 = b1;
            best.b2 = b2;
        }
    }
    return best;
}

// Lambert irradiance by the exact SH convolution, valid through order 2.
Rgb analytic_lambert_radiance(const AnalyticMaterial& material, const sh::ShVector& light,
                              Vec3 normal, Vec2 uv) {
    static const double kZonal[3] = {kPi, kTwoPi / 3.0, kPi / 4.0};
    double basis[9];
    sh::eval_basis(normal, light.order, basis);
    Rgb irradiance;
    for (int l = 0; l <= light.order; ++l) {
        for (int m = -l; m <= l; ++m) {
            irradiance += (kZonal[l] * basis[sh::sh_index(l, m)]) * light.at(l, m);
        }
    }
    return (1.0 / kPi) * oracle_diffuse_albedo(material, uv) * irradiance;
}

struct ShadePoint {
    Vec3 position;
    Vec3 normal;
    Vec2 uv;
};

Rgb shade_mc(const ShadePoint& point, Vec3 view_dir, const AnalyticMaterial& material,
             const OracleLight& light, const ReferenceOptions& options, std::mt19937_64& rng,
             const Mesh* occluder) {
    Vec3 n = point.normal;
    Mat3 frame = orthonormal_frame(n);
    auto occluded = [&](Vec3 dir) {
        if (!occluder) return false;
        return intersect_mesh(*occluder, point.position + 1e-6 * dir, dir).valid;
    };

    Rgb rho_d = oracle_diffuse_albedo(material, point.uv);
    Rgb diffuse;
    for (int s = 0; s < options.spp; ++s) {
        // Cosine-weighted hemisphere sample: estimator reduces to albedo * L.
        double u1 = uniform_double(rng), u2 = uniform_double(rng);
        double r = std::sqrt(u1);
        double phi = kTwoPi * u2;
        Vec3 local{r * std::cos(phi), r * std::sin(phi), std::sqrt(std::max(0.0, 1.0 - u1))};
        Vec3 dir = frame * local;
        if (occluded(dir)) continue;
        diffuse += light.eval(dir);
    }
    Rgb out = (1.0 / options.spp) * rho_d * diffuse;

    if (material.kind == AnalyticMaterial::Kind::kPhong) {
        double exponent = material.phong_exponent;
        Vec3 mirror = reflect_about(view_dir, n);
        Mat3 lobe_frame = orthonormal_frame(mirror);
        Rgb specular;
        for (int s = 0; s < options.spp; ++s) {
            // Phong-lobe sample about the mirror direction:
            // pdf = (n+1)/(2 pi) cos^n(alpha), estimator (n+2)/(n+1) L cos(theta).
            double u1 = uniform_double(rng), u2 = uniform_double(rng);
            double ca = std::pow(u1, 1.0 / (exponent + 1.0));
            double sa = std::sqrt(std::max(0.0, 1.0 - ca * ca));
            double phi = kTwoPi * u2;
            Vec3 dir = lobe_frame * Vec3{sa * std::cos(phi), sa * std::sin(phi), ca};
            double cos_theta = dot(dir, n);
            if (cos_theta <= 0.0) continue;
            if (occluded(dir)) continue;
            specular += cos_theta * light.eval(dir);
        }
        double norm = (exponent + 2.0) / (exponent + 1.0) / options.spp;
        out += norm * material.specular_albedo * specular;
    }
    return out;
}

template <typename HitFn>
RadianceImage render_reference_impl(const Camera& camera, const AnalyticMaterial& material,
                                    const OracleLight& light, const ReferenceOptions& options,
                                    const HitFn& hit_fn, const Mesh* occluder) {
    material.validate();
    if (options.analytic) {
        require(material.kind == AnalyticMaterial::Kind::kLambert,
                "analytic reference path requires a Lambert material");
        require(light.sh.has_value() && light.sh->order <= 2,
                "analytic reference path requires SH light of order <= 2");
    }

    RadianceImage out;
    out.width = camera.width;
    out.height = camera.height;
    out.radiance = ImageRgb(camera.width, camera.height);
    out.mask = MaskImage(camera.width, camera.height, 0);

    Vec3 origin = camera.center();
    parallel_ranges(static_cast<std::size_t>(camera.height), 8,
                    [&](std::size_t lo, std::size_t hi, std::size_t) {
        for (std::size_t y = lo; y < hi; ++y) {
            for (int x = 0; x < camera.width; ++x) {
                Vec3 dir = camera.ray_dir(x + 0.5, y + 0.5);
                Hit hit = hit_fn(origin, dir);
                if (!hit.valid) {
                    // Background: the panorama itself, or black for pure SH.
                    out.radiance.at(x, static_cast<int>(y)) =
                        light.env ? light.env->nearest(dir) : Rgb{};
                    continue;
                }
                out.mask.at(x, static_cast<int>(y)) = 1;
                Rgb value;
                if (options.analytic) {
                    value = analytic_lambert_radiance(material, *light.sh, hit.normal, hit.uv);
                } else {
                    std::mt19937_64 rng(
                        mix_seed(options.seed, static_cast<std::uint64_t>(camera.id) << 32 | y,
                                 static_cast<std::uint64_t>(x)));
                    ShadePoint point{hit.position, hit.normal, hit.uv};
                    value = shade_mc(point, normalized(origin - hit.position), material, light,
                                     options, rng, occluder);
                }
                out.radiance.at(x, static_cast<int>(y)) = value;
            }
        }
    });
    for (std::uint8_t m : out.mask.data) out.masked_count += m;
    return out;
}

}  // namespace

RadianceImage render_reference(const SphereGeom& sphere, const Camera& camera,
                               const AnalyticMaterial& material, const OracleLight& light,
                               const ReferenceOptions& options) {
    require(!options.occlusion, "occlusion flag applies to mesh geometry only");
    return render_reference_impl(
        camera, material, light, options,
        [&sphere](Vec3 o, Vec3 d) { return intersect_sphere(sphere, o, d); }, nullptr);
}

RadianceImage render_reference(const Mesh& mesh, const Camera& camera,
                               const AnalyticMaterial& material, const OracleLight& light,
                               const ReferenceOptions& options) {
    auto hit_fn = [&mesh](Vec3 o, Vec3 d) {
        Hit hit;
        MeshHit mh = intersect_mesh(mesh, o, d);
        if (!mh.valid) return hit;
        const auto& face = mesh.faces[mh.face];
        double b0 = 1.0 - mh.b1 - mh.b2;
        hit.valid = true;
        hit.position = o + mh.t * d;
        hit.normal = normalized(b0 * mesh.normals[face[0]] + mh.b1 * mesh.normals[face[1]] +
                                mh.b2 * mesh.normals[face[2]]);
        const auto& uv = mesh.face_uvs[mh.face];
        hit.uv = b0 * uv[0] + mh.b1 * uv[1] + mh.b2 * uv[2];
        return hit;
    };
    return render_reference_impl(camera, material, light, options, hit_fn,
                                 options.occlusion ? &mesh : nullptr);
}

// ---------------------------------------------------------------------------
// Fixture geometry

Mesh make_uv_sphere(Vec3 center, double radius, int lat_segments, int lon_segments) {
    require(lat_segments >= 3 && lon_segments >= 3, "make_uv_sphere: too few segments");
    Mesh mesh;
    int rows = lat_segments + 1, cols = lon_segments + 1;
    mesh.vertices.reserve(static_cast<std::size_t>(rows) * cols);
    mesh.normals.reserve(mesh.vertices.capacity());
    std::vector<Vec2> uvs(static_cast<std::size_t>(rows) * cols);
    for (int iy = 0; iy < rows; ++iy) {
        double theta = kPi * iy / lat_segments;
        for (int ix = 0; ix < cols; ++ix) {
            double phi = kTwoPi * ix / lon_segments;
            Vec3 n{std::sin(theta) * std::cos(phi), std::cos(theta),
                   std::sin(theta) * std::sin(phi)};
            mesh.vertices.push_back(center + radius * n);
            mesh.normals.push_back(n);
            uvs[static_cast<std::size_t>(iy) * cols + ix] =
                Vec2{static_cast<double>(ix) / lon_segments, static_cast<double>(iy) / lat_segments};
        }
    }
    auto vid = [cols](int iy, int ix) { return iy * cols + ix; };
    auto emit = [&](int a, int b, int c) {
        Vec3 e1 = mesh.vertices[b] - mesh.vertices[a];
        Vec3 e2 = mesh.vertices[c] - mesh.vertices[a];
        if (dot(cross(e1, e2), cross(e1, e2)) < 1e-20) return;  // pole-degenerate
        mesh.faces.push_back({a, b, c});
        mesh.face_uvs.push_back({uvs[a], uvs[b], uvs[c]});
    };
    for (int iy = 0; iy < lat_segments; ++iy) {
        for (int ix = 0; ix < lon_segments; ++ix) {
            int a = vid(iy, ix), b = vid(iy, ix + 1), c = vid(iy + 1, ix + 1), d = vid(iy + 1, ix);
            emit(a, b, c);
            emit(a, c, d);
        }
    }

    // Drop vertices the pole-degenerate triangles left unreferenced.
    std::vector<int> remap(mesh.vertices.size(), -1);
    Mesh packed;
    for (auto& face : mesh.faces) {
        for (int c = 0; c < 3; ++c) {
            int v = face[c];
            if (remap[v] < 0) {
                remap[v] = static_cast<int>(packed.vertices.size());
                packed.vertices.push_back(mesh.vertices[v]);
                packed.normals.push_back(mesh.normals[v]);
            }
            face[c] = remap[v];
        }
    }
    packed.faces = std::move(mesh.faces);
    packed.face_uvs = std::move(mesh.face_uvs);
    return packed;
}

Camera make_look_at_camera(int id, Vec3 eye, Vec3 target, int width, int height,
                           double focal_px) {
    Vec3 forward = normalized(target - eye);
    require(std::abs(forward.y) < 0.999, "make_look_at_camera: view direction too close to +Y");
    Vec3 right = normalized(cross(forward, Vec3{0, 1, 0}));
    Vec3 down = cross(forward, right);
    Camera cam;
    cam.id = id;
    cam.fx = cam.fy = focal_px;
    cam.cx = width / 2.0;
    cam.cy = height / 2.0;
    cam.width = width;
    cam.height = height;
    cam.rotation = Mat3::from_rows(right, down, forward);
    cam.translation = -1.0 * (cam.rotation * eye);
    return cam;
}

// ---------------------------------------------------------------------------
// Dataset generation

GeneratedScenes generate_scene(const SceneGenConfig& config) {
    require(config.view_count >= 2, "generate_scene: need at least 2 views");
    require(config.resolution >= 8, "generate_scene: resolution too small");
    config.material.validate();

    Mesh proxy = make_uv_sphere(config.sphere.center, config.sphere.radius, config.proxy_lat,
                                config.proxy_lon);
    validate_mesh(proxy);

    std::vector<Camera> cameras;
    std::mt19937_64 rng(splitmix64(config.seed ^ 0x5345454e47454eULL));
    double focal = config.focal_scale * config.resolution;
    for (int i = 0; i < config.view_count; ++i) {
        Vec3 dir;
        do {
            dir = uniform_sphere_dir(rng);
        } while (std::abs(dir.y) > 0.9);  // keep the +Y up vector valid
        Vec3 eye = config.sphere.center + config.camera_distance * config.sphere.radius * dir;
        cameras.push_back(make_look_at_camera(i, eye, config.sphere.center, config.resolution,
                                              config.resolution, focal));
        validate_camera(cameras.back());
    }

    GeneratedScenes out;
    out.light_a_sh = config.light_a.to_sh(10);
    out.light_b_sh = config.light_b.to_sh(10);

    auto build = [&](const OracleLight& light) {
        SceneDataset ds;
        ds.cameras = cameras;
        ds.mesh = proxy;
        for (const Camera& cam : cameras) {
            ReferenceOptions opts = config.reference;
            RadianceImage image = render_reference(config.sphere, cam, config.material, light, opts);
            ViewImage view;
            view.camera_id = cam.id;
            view.pixels = std::move(image.radiance);
            view.mask = std::move(image.mask);
            ds.views.push_back(std::move(view));
        }
        ds.train_ids.resize(ds.views.size());
        for (std::size_t i = 0; i < ds.views.size(); ++i) ds.train_ids[i] = static_cast<int>(i);
        return ds;
    };
    out.scene_a = build(config.light_a);
    out.scene_b = build(config.light_b);
    return out;
}

sh::ShVector make_positive_light(int order, std::uint64_t seed, Rgb base, double amplitude) {
    require(order >= 0 && order <= sh::kMaxOrder, "make_positive_light: bad order");
    sh::ShVector light(order);
    light.coeffs[0] = (2.0 * std::sqrt(kPi)) * base;
    std::mt19937_64 rng(splitmix64(seed ^ 0x4c49474854ULL));
    std::vector<Rgb> noise(sh::coeff_count(order));
    for (int k = 1; k < sh::coeff_count(order); ++k) {
        noise[k] = Rgb{uniform_double(rng) - 0.5, uniform_double(rng) - 0.5,
                       uniform_double(rng) - 0.5};
    }
    double floor_level = 0.1 * std::min({base.r, base.g, base.b});
    auto dirs = uniform_sphere_fibonacci(2048, 17);
    for (int attempt = 0; attempt < 32; ++attempt) {
        for (int k = 1; k < sh::coeff_count(order); ++k) light.coeffs[k] = amplitude * noise[k];
        double min_value = 1e30;
        for (const Vec3& d : dirs) {
            Rgb v = sh::eval_radiance(light, d);
            min_value = std::min({min_value, v.r, v.g, v.b});
        }
        if (min_value > floor_level) return light;
        amplitude *= 0.7;
    }
    fail("make_positive_light: could not reach a positive reconstruction");
}

std::unique_ptr<FdFixture> make_fd_fixture(std::uint64_t seed, int image_size, int texture_res,
                                           int l_d, int l_s) {
    auto fx = std::make_unique<FdFixture>();
    std::mt19937_64 rng(splitmix64(seed ^ 0xF1D0ULL));

    fx->mesh = make_uv_sphere(Vec3{0, 0, 0}, 1.0, 8, 16);
    fx->camera = make_look_at_camera(0, Vec3{0.4, 0.5, -3.0}, Vec3{0, 0, 0}, image_size,
                                     image_size, 0.8 * image_size);
    fx->gbuffer = rasterize(fx->mesh, fx->camera, compute_tangent_frames(fx->mesh));

    InitialParameters init = init_parameters(texture_res, l_d, l_s);
    fx->params.textures = std::move(init.textures);
    fx->params.field = std::move(init.field);

    // Albedos uniform in [0.3, 0.45] u [0.55, 0.7]: at least 0.05 from the
    // |rho - 0.5| kink.
    auto safe_albedo = [&rng]() {
        double v = 0.3 + 0.15 * uniform_double(rng);
        return (uniform_double(rng) < 0.5) ? v : v + 0.25;
    };
    for (Rgb& c : fx->params.textures.rho_d) c = Rgb{safe_albedo(), safe_albedo(), safe_albedo()};
    for (Rgb& c : fx->params.textures.rho_s) c = Rgb{safe_albedo(), safe_albedo(), safe_albedo()};

    for (double& v : fx->params.field.t_d) v += 0.3 * (uniform_double(rng) - 0.5);
    for (double& v : fx->params.field.t_s) v += 0.05 * (uniform_double(rng) - 0.5);

    // Light strongly positive everywhere: the max(L,0) clamp never sits
    // within reach of the eps-scale perturbations.
    fx->params.illum.current = sh::ShVector(10);
    fx->params.illum.current.coeffs[0] = Rgb{7.0, 6.5, 7.5};
    for (int k = 1; k < sh::coeff_count(10); ++k) {
        fx->params.illum.current.coeffs[k] =
            Rgb{0.1 * (uniform_double(rng) - 0.5), 0.1 * (uniform_double(rng) - 0.5),
                0.1 * (uniform_double(rng) - 0.5)};
    }
    // Initial coefficients offset dominantly in the constant band so the
    // illumination-loss sign terms stay away from zero.
    fx->params.illum.initial = fx->params.illum.current;
    fx->params.illum.initial.coeffs[0] = fx->params.illum.initial.coeffs[0] - Rgb{0.5, 0.5, 0.5};
    for (int k = 1; k < sh::coeff_count(10); ++k) {
        fx->params.illum.initial.coeffs[k] =
            fx->params.illum.initial.coeffs[k] +
            Rgb{0.02 * (uniform_double(rng) - 0.5), 0.02 * (uniform_double(rng) - 0.5),
                0.02 * (uniform_double(rng) - 0.5)};
    }

    // Target = forward render plus per-pixel offsets in +-[0.05, 0.15]:
    // the |I - target| signs cannot flip under eps-scale perturbations.
    fx->view.camera_id = 0;
    fx->view.mask = fx->gbuffer.mask;
    fx->view.pixels = ImageRgb(image_size, image_size, Rgb{0.3, 0.3, 0.3});
    {
        LightSampleSet samples = make_light_samples(fx->gbuffer, SamplingConfig{});
        RadianceImage rendered = render_view(fx->gbuffer, fx->params.textures, fx->params.field,
                                             fx->params.illum.current, samples);
        for (std::uint32_t pixel : fx->gbuffer.masked_pixels) {
            Rgb offset;
            for (int c = 0; c < 3; ++c) {
                double mag = 0.05 + 0.10 * uniform_double(rng);
                offset[c] = (uniform_double(rng) < 0.5) ? -mag : mag;
            }
            fx->view.pixels.data[pixel] = rendered.radiance.data[pixel] + offset;
        }
    }

    fx->context = ViewContext::make(fx->gbuffer, fx->view, SamplingConfig{});

    EnvironmentMap coverage(16);
    std::fill(coverage.coverage.data.begin(), coverage.coverage.data.end(), 1);
    fx->illum_ctx = IlluminationLossContext::make(coverage.coverage, coverage.width,
                                                  coverage.height, 10, 512, seed);
    return fx;
}

void write_generated_scenes(const GeneratedScenes& scenes, const SceneGenConfig& config,
                            const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    fs::create_directories(root);
    save_scene(scenes.scene_a, root / "a");
    save_scene(scenes.scene_b, root / "b");
    sh::save_sh(scenes.light_a_sh, root / "light_a.sh");
    sh::save_sh(scenes.light_b_sh, root / "light_b.sh");

    nlohmann::json truth;
    truth["material"] = {
        {"kind", config.material.kind == AnalyticMaterial::Kind::kLambert ? "lambert" : "phong"},
        {"diffuse_albedo", {config.material.diffuse_albedo.r, config.material.diffuse_albedo.g,
                            config.material.diffuse_albedo.b}},
        {"specular_albedo", {config.material.specular_albedo.r, config.material.specular_albedo.g,
                             config.material.specular_albedo.b}},
        {"phong_exponent", config.material.phong_exponent},
        {"textured_diffuse", config.material.textured_diffuse},
    };
    truth["light_a"] = "light_a.sh";
    truth["light_b"] = "light_b.sh";
    truth["seed"] = config.seed;
    truth["view_count"] = config.view_count;
    truth["resolution"] = config.resolution;
    truth["spp"] = config.reference.spp;
    std::ofstream f(root / "truth.json");
    require(f.good(), "cannot write truth.json under ", root.string());
    f << truth.dump(2) << "\n";
}

}  // namespace relight
