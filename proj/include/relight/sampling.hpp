#pragma once

#include <cstdint>
#include <vector>

#include "relight/raster.hpp"
#include "relight/vec.hpp"

namespace relight {

// Cone layout for the per-pixel light directions. Half angles in degrees.
struct SamplingConfig {
    std::vector<double> diffuse_half_angles{20.0, 40.0};
    std::vector<double> specular_half_angles{5.0, 10.0};
    int samples_per_cone = 8;
    bool include_axis = true;

    int diffuse_count() const {
        return (include_axis ? 1 : 0) +
               static_cast<int>(diffuse_half_angles.size()) * samples_per_cone;
    }
    int specular_count() const {
        return (include_axis ? 1 : 0) +
               static_cast<int>(specular_half_angles.size()) * samples_per_cone;
    }
    void validate() const;
};

// `count` directions at exactly `half_angle_deg` from the axis, azimuths
// uniform with offset `phase`, in the deterministic frame of the axis.
std::vector<Vec3> sample_cone_directions(Vec3 axis, double half_angle_deg, int count,
                                         double phase);

// Tangent-space diffuse directions (shared by every pixel): optional
// +z axis sample plus one ring per configured cone. Ring r is phase-offset
// by half an azimuth step relative to ring r-1.
std::vector<Vec3> diffuse_tangent_dirs(const SamplingConfig& config);

// Tangent-space halfway directions for the specular scheme (same layout,
// specular half angles).
std::vector<Vec3> specular_halfway_dirs(const SamplingConfig& config);

// Per-view sample bundle over the G-buffer's masked pixels.
struct LightSampleSet {
    int m_d = 0;
    int m_s = 0;
    std::vector<std::uint32_t> pixels;    // masked pixel indices, scan order
    std::vector<Vec3> diffuse_tangent;    // pixels.size() * m_d
    std::vector<Vec3> specular_tangent;   // pixels.size() * m_s
    std::vector<Vec3> diffuse_world;      // filled by tangent_to_world
    std::vector<Vec3> specular_world;
    std::vector<Vec3> mirror;             // world mirror direction per pixel
    std::vector<double> specular_cos;     // dot(specular_world, mirror) per sample
};

// Diffuse cones about the tangent-space normal.
LightSampleSet sample_diffuse_dirs(const GBuffer& gbuffer, const SamplingConfig& config);
// Adds specular samples: halfway cones about the normal, each reflected
// about the tangent-space view direction. Below-horizon samples are kept.
void sample_specular_dirs(const GBuffer& gbuffer, const SamplingConfig& config,
                          LightSampleSet& set);
// Applies each pixel's R_TBN; also fills mirror directions and specular
// cosines.
void tangent_to_world(LightSampleSet& set, const GBuffer& gbuffer);

// Full bundle: diffuse + specular + world transform.
LightSampleSet make_light_samples(const GBuffer& gbuffer, const SamplingConfig& config);

// Shared world-direction quadrature (validation path): every pixel gets
// the same world directions for both components.
LightSampleSet make_fixed_world_samples(const GBuffer& gbuffer, const std::vector<Vec3>& dirs);

// Spherical Fibonacci lattice rotated by a seeded rotation; a uniform
// deterministic sphere quadrature with weight 4 pi / n.
std::vector<Vec3> uniform_sphere_fibonacci(int n, std::uint64_t seed);
// Seeded iid uniform directions.
std::vector<Vec3> uniform_sphere_random(int n, std::uint64_t seed);

}  // namespace relight
