#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "relight/image.hpp"
#include "relight/scene.hpp"
#include "relight/vec.hpp"

namespace relight {

// Orthonormal right-handed tangent frame; columns of the tangent-to-world
// rotation are (tangent, bitangent, normal).
struct TbnFrame {
    Vec3 tangent;
    Vec3 bitangent;
    Vec3 normal;

    Mat3 to_world() const { return Mat3::from_columns(tangent, bitangent, normal); }
    Vec3 world_dir(Vec3 tangent_dir) const {
        return tangent_dir.x * tangent + tangent_dir.y * bitangent + tangent_dir.z * normal;
    }
    Vec3 tangent_dir(Vec3 world_dir) const {
        return {dot(world_dir, tangent), dot(world_dir, bitangent), dot(world_dir, normal)};
    }
};

// Per-pixel geometry raster. Unmasked pixels hold sentinels (uv = -1,
// zero vectors, depth = +inf) and must not be read downstream.
struct GBuffer {
    int width = 0;
    int height = 0;
    int camera_id = 0;
    MaskImage mask;
    Raster<Vec2> uv;
    Raster<Vec3> position;
    Raster<Vec3> normal;
    Raster<Vec3> tangent;
    Raster<Vec3> view_dir;  // surface point toward camera center, unit
    Raster<double> depth;   // camera-space z

    // Scanline-order linear indices of masked pixels.
    std::vector<std::uint32_t> masked_pixels;

    TbnFrame frame_at(std::uint32_t pixel) const {
        Vec3 n = normal.data[pixel];
        Vec3 t = tangent.data[pixel];
        return TbnFrame{t, cross(n, t), n};
    }
};

struct TangentBasis {
    std::vector<Vec3> tangents;  // per vertex, orthogonal to the vertex normal
    int fallback_count = 0;      // vertices that needed an arbitrary-axis fallback
};

// Standard uv-gradient tangents accumulated over incident faces, then
// Gram-Schmidt-orthogonalized against the vertex normal. Degenerate-uv
// faces are skipped; vertices left without a contribution get a fallback
// axis and are counted in the report.
TangentBasis compute_tangent_frames(const Mesh& mesh);

// Software rasterization with perspective-correct interpolation, nearest
// depth wins, no back-face culling, pixel centers at half-integers,
// top-left fill rule.
GBuffer rasterize(const Mesh& mesh, const Camera& camera, const TangentBasis& tangents);

// Version-tagged binary cache, keyed by mesh hash + camera parameters.
void save_gbuffer(const GBuffer& gbuffer, const std::filesystem::path& path);
GBuffer load_gbuffer(const std::filesystem::path& path);
std::filesystem::path gbuffer_cache_path(const std::filesystem::path& cache_dir,
                                         std::uint64_t mesh_hash, const Camera& camera);
// Rasterizes through the cache when cache_dir is nonempty.
GBuffer rasterize_cached(const Mesh& mesh, const Camera& camera, const TangentBasis& tangents,
                         const std::filesystem::path& cache_dir);

}  // namespace relight
