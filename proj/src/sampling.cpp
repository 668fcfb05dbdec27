#include "relight/sampling.hpp"

#include <cmath>

#include "relight/error.hpp"
#include "relight/rng.hpp"

namespace relight {

void SamplingConfig::validate() const {
    for (double a : diffuse_half_angles)
        require(a >= 0.0 && a < 90.0, "diffuse half angle out of [0, 90): ", a);
    for (double a : specular_half_angles)
        require(a >= 0.0 && a < 90.0, "specular half angle out of [0, 90): ", a);
    require(samples_per_cone >= 1, "samples_per_cone must be >= 1");
}

std::vector<Vec3> sample_cone_directions(Vec3 axis, double half_angle_deg, int count,
                                         double phase) {
    require(is_unit(axis), "sample_cone_directions: axis is not unit length");
    double theta = half_angle_deg * kPi / 180.0;
    double ct = std::cos(theta), st = std::sin(theta);
    Mat3 frame = orthonormal_frame(axis);
    std::vector<Vec3> dirs;
    dirs.reserve(count);
    for (int i = 0; i < count; ++i) {
        double phi = phase + kTwoPi * i / count;
        Vec3 local{st * std::cos(phi), st * std::sin(phi), ct};
        dirs.push_back(frame * local);
    }
    return dirs;
}

namespace {

// Rings about tangent-space +z; ring r offset by half an azimuth step.
std::vector<Vec3> ring_set(const std::vector<double>& half_angles, int per_cone,
                           bool include_axis) {
    std::vector<Vec3> dirs;
    if (include_axis) dirs.push_back(Vec3{0, 0, 1});
    for (std::size_t r = 0; r < half_angles.size(); ++r) {
        double phase = (kPi / per_cone) * static_cast<double>(r);
        double theta = half_angles[r] * kPi / 180.0;
        double ct = std::cos(theta), st = std::sin(theta);
        for (int i = 0; i < per_cone; ++i) {
            double phi = phase + kTwoPi * i / per_cone;
            dirs.push_back(Vec3{st * std::cos(phi), st * std::sin(phi), ct});
        }
    }
    return dirs;
}

}  // namespace

std::vector<Vec3> diffuse_tangent_dirs(const SamplingConfig& config) {
    config.validate();
    return ring_set(config.diffuse_half_angles, config.samples_per_cone, config.include_axis);
}

std::vector<Vec3> specular_halfway_dirs(const SamplingConfig& config) {
    config.validate();
    return ring_set(config.specular_half_angles, config.samples_per_cone, config.include_axis);
}

LightSampleSet sample_diffuse_dirs(const GBuffer& gbuffer, const SamplingConfig& config) {
    LightSampleSet set;
    std::vector<Vec3> shared = diffuse_tangent_dirs(config);
    set.m_d = static_cast<int>(shared.size());
    set.pixels = gbuffer.masked_pixels;
    set.diffuse_tangent.reserve(set.pixels.size() * shared.size());
    for (std::size_t p = 0; p < set.pixels.size(); ++p) {
        for (const Vec3& d : shared) set.diffuse_tangent.push_back(d);
    }
    return set;
}

void sample_specular_dirs(const GBuffer& gbuffer, const SamplingConfig& config,
                          LightSampleSet& set) {
    std::vector<Vec3> halfways = specular_halfway_dirs(config);
    set.m_s = static_cast<int>(halfways.size());
    set.specular_tangent.clear();
    set.specular_tangent.reserve(set.pixels.size() * halfways.size());
    for (std::uint32_t pixel : set.pixels) {
        TbnFrame frame = gbuffer.frame_at(pixel);
        Vec3 wo = frame.tangent_dir(gbuffer.view_dir.data[pixel]);
        for (const Vec3& h : halfways) {
            // omega_i = 2 (omega_o . h) h - omega_o; may fall below the
            // tangent plane, kept so the transport learns zeros there.
            set.specular_tangent.push_back(reflect_about(wo, h));
        }
    }
}

void tangent_to_world(LightSampleSet& set, const GBuffer& gbuffer) {
    std::size_t np = set.pixels.size();
    set.diffuse_world.resize(np * set.m_d);
    set.specular_world.resize(np * set.m_s);
    set.mirror.resize(np);
    set.specular_cos.resize(np * set.m_s);
    for (std::size_t p = 0; p < np; ++p) {
        std::uint32_t pixel = set.pixels[p];
        TbnFrame frame = gbuffer.frame_at(pixel);
        for (int j = 0; j < set.m_d; ++j) {
            set.diffuse_world[p * set.m_d + j] = frame.world_dir(set.diffuse_tangent[p * set.m_d + j]);
        }
        Vec3 n = frame.normal;
        Vec3 view = gbuffer.view_dir.data[pixel];
        Vec3 r = reflect_about(view, n);
        set.mirror[p] = r;
        for (int j = 0; j < set.m_s; ++j) {
            Vec3 w = frame.world_dir(set.specular_tangent[p * set.m_s + j]);
            set.specular_world[p * set.m_s + j] = w;
            set.specular_cos[p * set.m_s + j] = dot(w, r);
        }
    }
}

LightSampleSet make_light_samples(const GBuffer& gbuffer, const SamplingConfig& config) {
    LightSampleSet set = sample_diffuse_dirs(gbuffer, config);
    sample_specular_dirs(gbuffer, config, set);
    tangent_to_world(set, gbuffer);
    return set;
}

LightSampleSet make_fixed_world_samples(const GBuffer& gbuffer, const std::vector<Vec3>& dirs) {
    LightSampleSet set;
    set.m_d = static_cast<int>(dirs.size());
    set.m_s = static_cast<int>(dirs.size());
    set.pixels = gbuffer.masked_pixels;
    std::size_t np = set.pixels.size();
    set.diffuse_tangent.resize(np * dirs.size());
    set.specular_tangent.resize(np * dirs.size());
    set.diffuse_world.resize(np * dirs.size());
    set.specular_world.resize(np * dirs.size());
    set.mirror.resize(np);
    set.specular_cos.resize(np * dirs.size());
    for (std::size_t p = 0; p < np; ++p) {
        std::uint32_t pixel = set.pixels[p];
        TbnFrame frame = gbuffer.frame_at(pixel);
        Vec3 r = reflect_about(gbuffer.view_dir.data[pixel], frame.normal);
        set.mirror[p] = r;
        for (std::size_t j = 0; j < dirs.size(); ++j) {
            set.diffuse_world[p * dirs.size() + j] = dirs[j];
            set.specular_world[p * dirs.size() + j] = dirs[j];
            Vec3 tangent_dir = frame.tangent_dir(dirs[j]);
            set.diffuse_tangent[p * dirs.size() + j] = tangent_dir;
            set.specular_tangent[p * dirs.size() + j] = tangent_dir;
            set.specular_cos[p * dirs.size() + j] = dot(dirs[j], r);
        }
    }
    return set;
}

std::vector<Vec3> uniform_sphere_fibonacci(int n, std::uint64_t seed) {
    require(n > 0, "uniform_sphere_fibonacci: need n > 0");
    std::mt19937_64 rng(splitmix64(seed));
    Mat3 rot = axis_angle_rotation(uniform_sphere_dir(rng), uniform_double(rng) * kTwoPi);
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    std::vector<Vec3> dirs;
    dirs.reserve(n);
    for (int i = 0; i < n; ++i) {
        double z = 1.0 - (2.0 * i + 1.0) / n;
        double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        double phi = golden * i;
        dirs.push_back(rot * Vec3{s * std::cos(phi), s * std::sin(phi), z});
    }
    return dirs;
}

std::vector<Vec3> uniform_sphere_random(int n, std::uint64_t seed) {
    require(n > 0, "uniform_sphere_random: need n > 0");
    std::mt19937_64 rng(splitmix64(seed));
    std::vector<Vec3> dirs;
    dirs.reserve(n);
    for (int i = 0; i < n; ++i) dirs.push_back(uniform_sphere_dir(rng));
    return dirs;
}

}  // namespace relight
