#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "relight/image.hpp"
#include "relight/vec.hpp"

namespace relight {

// Pinhole camera. Extrinsics are world-to-camera: x_cam = R x_world + t,
// with +Z forward and +Y down in the image (pixel = (fx X/Z + cx, fy Y/Z + cy)).
struct Camera {
    int id = 0;
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;
    Mat3 rotation;
    Vec3 translation;

    Vec3 center() const { return -1.0 * (rotation.transposed() * translation); }
    Vec3 to_camera(Vec3 world) const { return rotation * world + translation; }
    // Returns (px, py) and camera-space depth z; z <= 0 means behind the camera.
    Vec3 project(Vec3 world) const {
        Vec3 c = to_camera(world);
        return {fx * c.x / c.z + cx, fy * c.y / c.z + cy, c.z};
    }
    // World-space unit ray through pixel coordinates (px, py).
    Vec3 ray_dir(double px, double py) const {
        Vec3 d{(px - cx) / fx, (py - cy) / fy, 1.0};
        return normalized(rotation.transposed() * d);
    }
};

// Triangle mesh with per-vertex normals and per-corner uvs.
struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<Vec3> normals;                    // per vertex, unit
    std::vector<std::array<int, 3>> faces;        // vertex indices
    std::vector<std::array<Vec2, 3>> face_uvs;    // uv per corner, parallel to faces
};

struct ViewImage {
    int camera_id = 0;
    ImageRgb pixels;
    MaskImage mask;
};

struct SceneDataset {
    std::vector<Camera> cameras;
    Mesh mesh;
    std::vector<ViewImage> views;
    std::vector<int> train_ids;  // indices into views
    std::vector<int> test_ids;

    const Camera& camera_of(const ViewImage& view) const;
};

// Directory layout:
//   cameras.json   array of {id, fx, fy, cx, cy, width, height, extrinsic[12]}
//   proxy.obj      triangulated on load; per-vertex normals computed when absent
//   images/view_NNNN.pfm (or .png)
//   masks/view_NNNN.png
SceneDataset load_scene(const std::filesystem::path& root, bool srgb_8bit = false);
void save_scene(const SceneDataset& dataset, const std::filesystem::path& root);

// Deterministic seeded split; at least one view lands in each bucket.
SceneDataset split_views(SceneDataset dataset, double test_fraction, std::uint64_t seed);

// Validation entry points (also run by load_scene).
void validate_camera(const Camera& camera);
void validate_mesh(const Mesh& mesh);

Mesh load_obj(const std::filesystem::path& path);
void save_obj(const Mesh& mesh, const std::filesystem::path& path);

// Area-weighted face-normal averaging.
std::vector<Vec3> compute_vertex_normals(const std::vector<Vec3>& vertices,
                                         const std::vector<std::array<int, 3>>& faces);

// Content hash used as the G-buffer cache key component.
std::uint64_t mesh_content_hash(const Mesh& mesh);

std::string view_image_name(int camera_id);

}  // namespace relight
