#include "relight/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "relight/error.hpp"

namespace relight {

namespace {

Vec3 fallback_tangent(Vec3 normal) {
    double ax = std::abs(normal.x), ay = std::abs(normal.y), az = std::abs(normal.z);
    Vec3 axis = (ax <= ay && ax <= az) ? Vec3{1, 0, 0} : (ay <= az ? Vec3{0, 1, 0} : Vec3{0, 0, 1});
    return normalized(axis - dot(axis, normal) * normal);
}

}  // namespace

TangentBasis compute_tangent_frames(const Mesh& mesh) {
    TangentBasis out;
    std::vector<Vec3> acc(mesh.vertices.size(), Vec3{0, 0, 0});

    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& face = mesh.faces[f];
        const auto& uv = mesh.face_uvs[f];
        Vec3 e1 = mesh.vertices[face[1]] - mesh.vertices[face[0]];
        Vec3 e2 = mesh.vertices[face[2]] - mesh.vertices[face[0]];
        Vec2 duv1 = uv[1] - uv[0];
        Vec2 duv2 = uv[2] - uv[0];
        double det = duv1.x * duv2.y - duv2.x * duv1.y;
        if (std::abs(det) < 1e-12) continue;  // zero uv area
        double r = 1.0 / det;
        Vec3 t = r * (duv2.y * e1 - duv1.y * e2);
        for (int c = 0; c < 3; ++c) acc[face[c]] += t;
    }

    out.tangents.resize(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        Vec3 n = mesh.normals[i];
        Vec3 t = acc[i] - dot(acc[i], n) * n;
        double len = length(t);
        if (len < 1e-10) {
            out.tangents[i] = fallback_tangent(n);
            ++out.fallback_count;
        } else {
            out.tangents[i] = (1.0 / len) * t;
        }
    }
    return out;
}

namespace {

struct ScreenVertex {
    double x, y;    // pixel coordinates
    double z;       // camera-space depth
    double inv_z;
};

// Evaluated with the endpoints in a canonical order so that the two
// triangles sharing an edge see bit-identical magnitudes (negation is
// exact); otherwise rounding can leave seam pixels claimed by neither.
double edge_function(double ax, double ay, double bx, double by, double px, double py) {
    bool flip = (ay > by) || (ay == by && ax > bx);
    if (flip) {
        std::swap(ax, bx);
        std::swap(ay, by);
    }
    double e = (px - ax) * (by - ay) - (py - ay) * (bx - ax);
    return flip ? -e : e;
}

// Top-left rule: an edge owns its pixels when it is a top edge or a left
// edge of a counter-clockwise triangle.
bool edge_accepts(double e, double ax, double ay, double bx, double by) {
    if (e > 0.0) return true;
    if (e < 0.0) return false;
    double dx = bx - ax, dy = by - ay;
    bool top = (dy == 0.0 && dx > 0.0);
    bool left = (dy > 0.0);
    return top || left;
}

}  // namespace

GBuffer rasterize(const Mesh& mesh, const Camera& camera, const TangentBasis& tangents) {
    require(tangents.tangents.size() == mesh.vertices.size(),
            "rasterize: tangent basis does not match mesh");

    GBuffer gb;
    gb.width = camera.width;
    gb.height = camera.height;
    gb.camera_id = camera.id;
    gb.mask = MaskImage(gb.width, gb.height, 0);
    gb.uv = Raster<Vec2>(gb.width, gb.height, Vec2{-1, -1});
    gb.position = Raster<Vec3>(gb.width, gb.height);
    gb.normal = Raster<Vec3>(gb.width, gb.height);
    gb.tangent = Raster<Vec3>(gb.width, gb.height);
    gb.view_dir = Raster<Vec3>(gb.width, gb.height);
    gb.depth = Raster<double>(gb.width, gb.height, std::numeric_limits<double>::infinity());

    Vec3 cam_center = camera.center();
    constexpr double kNearEps = 1e-6;

    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& face = mesh.faces[f];
        ScreenVertex sv[3];
        bool behind = false;
        for (int c = 0; c < 3; ++c) {
            Vec3 p = camera.project(mesh.vertices[face[c]]);
            if (p.z <= kNearEps) {
                behind = true;  // no near-plane clipping; outside-in captures never need it
                break;
            }
            sv[c] = ScreenVertex{p.x, p.y, p.z, 1.0 / p.z};
        }
        if (behind) continue;

        double area = edge_function(sv[0].x, sv[0].y, sv[1].x, sv[1].y, sv[2].x, sv[2].y);
        if (area == 0.0) continue;
        // Orient counter-clockwise so the fill rule is winding-independent
        // (no back-face culling: coarse proxies may have flipped faces).
        int i0 = 0, i1 = 1, i2 = 2;
        if (area < 0.0) {
            std::swap(i1, i2);
            area = -area;
        }
        const ScreenVertex& a = sv[i0];
        const ScreenVertex& b = sv[i1];
        const ScreenVertex& c = sv[i2];

        int min_x = std::max(0, static_cast<int>(std::floor(std::min({a.x, b.x, c.x}) - 0.5)));
        int max_x = std::min(gb.width - 1, static_cast<int>(std::ceil(std::max({a.x, b.x, c.x}) - 0.5)));
        int min_y = std::max(0, static_cast<int>(std::floor(std::min({a.y, b.y, c.y}) - 0.5)));
        int max_y = std::min(gb.height - 1, static_cast<int>(std::ceil(std::max({a.y, b.y, c.y}) - 0.5)));
        if (min_x > max_x || min_y > max_y) continue;

        const Vec3 p0 = mesh.vertices[face[i0]], p1 = mesh.vertices[face[i1]],
                   p2 = mesh.vertices[face[i2]];
        const Vec3 n0 = mesh.normals[face[i0]], n1 = mesh.normals[face[i1]],
                   n2 = mesh.normals[face[i2]];
        const Vec3 t0 = tangents.tangents[face[i0]], t1 = tangents.tangents[face[i1]],
                   t2 = tangents.tangents[face[i2]];
        const Vec2 uv0 = mesh.face_uvs[f][i0], uv1 = mesh.face_uvs[f][i1], uv2 = mesh.face_uvs[f][i2];

        for (int py = min_y; py <= max_y; ++py) {
            double yc = py + 0.5;
            for (int px = min_x; px <= max_x; ++px) {
                double xc = px + 0.5;
                double e0 = edge_function(b.x, b.y, c.x, c.y, xc, yc);
                double e1 = edge_function(c.x, c.y, a.x, a.y, xc, yc);
                double e2 = edge_function(a.x, a.y, b.x, b.y, xc, yc);
                if (!edge_accepts(e0, b.x, b.y, c.x, c.y) ||
                    !edge_accepts(e1, c.x, c.y, a.x, a.y) ||
                    !edge_accepts(e2, a.x, a.y, b.x, b.y))
                    continue;

                double l0 = e0 / area, l1 = e1 / area, l2 = e2 / area;
                // Perspective-correct weights.
                double w0 = l0 * a.inv_z, w1 = l1 * b.inv_z, w2 = l2 * c.inv_z;
                double wsum = w0 + w1 + w2;
                double depth = 1.0 / wsum;
                if (depth >= gb.depth.at(px, py)) continue;
                w0 *= depth;
                w1 *= depth;
                w2 *= depth;

                Vec3 pos = w0 * p0 + w1 * p1 + w2 * p2;
                Vec3 n = normalized(w0 * n0 + w1 * n1 + w2 * n2);
                Vec3 t = w0 * t0 + w1 * t1 + w2 * t2;
                t = t - dot(t, n) * n;
                double tlen = length(t);
                t = tlen < 1e-10 ? fallback_tangent(n) : (1.0 / tlen) * t;

                gb.depth.at(px, py) = depth;
                gb.mask.at(px, py) = 1;
                gb.uv.at(px, py) = w0 * uv0 + w1 * uv1 + w2 * uv2;
                gb.position.at(px, py) = pos;
                gb.normal.at(px, py) = n;
                gb.tangent.at(px, py) = t;
                gb.view_dir.at(px, py) = normalized(cam_center - pos);
            }
        }
    }

    for (std::uint32_t i = 0; i < gb.mask.size(); ++i) {
        if (gb.mask.data[i]) gb.masked_pixels.push_back(i);
    }
    return gb;
}

// ---------------------------------------------------------------------------
// Disk cache

namespace {

constexpr char kGbufMagic[4] = {'G', 'B', 'U', 'F'};
constexpr std::uint32_t kGbufVersion = 1;

template <typename T>
void write_pod(std::ofstream& f, const T& v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
void read_pod(std::ifstream& f, T& v) {
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
}
template <typename T>
void write_vec(std::ofstream& f, const std::vector<T>& v) {
    std::uint64_t n = v.size();
    write_pod(f, n);
    f.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
}
template <typename T>
void read_vec(std::ifstream& f, std::vector<T>& v) {
    std::uint64_t n = 0;
    read_pod(f, n);
    v.resize(n);
    f.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
}

}  // namespace

void save_gbuffer(const GBuffer& gb, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    require(f.good(), "cannot open for writing: ", path.string());
    f.write(kGbufMagic, 4);
    write_pod(f, kGbufVersion);
    write_pod(f, gb.width);
    write_pod(f, gb.height);
    write_pod(f, gb.camera_id);
    write_vec(f, gb.mask.data);
    write_vec(f, gb.uv.data);
    write_vec(f, gb.position.data);
    write_vec(f, gb.normal.data);
    write_vec(f, gb.tangent.data);
    write_vec(f, gb.view_dir.data);
    write_vec(f, gb.depth.data);
    write_vec(f, gb.masked_pixels);
    require(f.good(), "write failed: ", path.string());
}

GBuffer load_gbuffer(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), "cannot open G-buffer cache: ", path.string());
    char magic[4];
    f.read(magic, 4);
    require(std::memcmp(magic, kGbufMagic, 4) == 0, path.string(), ": not a G-buffer file");
    std::uint32_t version = 0;
    read_pod(f, version);
    require(version == kGbufVersion, path.string(), ": unsupported G-buffer version ", version);
    GBuffer gb;
    read_pod(f, gb.width);
    read_pod(f, gb.height);
    read_pod(f, gb.camera_id);
    auto resize_all = [&](auto& raster) {
        raster.width = gb.width;
        raster.height = gb.height;
    };
    read_vec(f, gb.mask.data);
    read_vec(f, gb.uv.data);
    read_vec(f, gb.position.data);
    read_vec(f, gb.normal.data);
    read_vec(f, gb.tangent.data);
    read_vec(f, gb.view_dir.data);
    read_vec(f, gb.depth.data);
    read_vec(f, gb.masked_pixels);
    require(!f.fail(), path.string(), ": truncated G-buffer file");
    resize_all(gb.mask);
    resize_all(gb.uv);
    resize_all(gb.position);
    resize_all(gb.normal);
    resize_all(gb.tangent);
    resize_all(gb.view_dir);
    resize_all(gb.depth);
    std::size_t expect = static_cast<std::size_t>(gb.width) * gb.height;
    require(gb.mask.data.size() == expect, path.string(), ": G-buffer size mismatch");
    return gb;
}

std::filesystem::path gbuffer_cache_path(const std::filesystem::path& cache_dir,
                                         std::uint64_t mesh_hash, const Camera& camera) {
    // Key on the full camera, not just its id: intrinsics may change.
    std::uint64_t h = mesh_hash;
    auto mix = [&h](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        h ^= bits + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    };
    mix(camera.fx);
    mix(camera.fy);
    mix(camera.cx);
    mix(camera.cy);
    mix(static_cast<double>(camera.width));
    mix(static_cast<double>(camera.height));
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) mix(camera.rotation.m[i][j]);
    }
    mix(camera.translation.x);
    mix(camera.translation.y);
    mix(camera.translation.z);
    char name[64];
    std::snprintf(name, sizeof(name), "gbuf_%04d_%016llx.bin", camera.id,
                  static_cast<unsigned long long>(h));
    return cache_dir / name;
}

GBuffer rasterize_cached(const Mesh& mesh, const Camera& camera, const TangentBasis& tangents,
                         const std::filesystem::path& cache_dir) {
    if (cache_dir.empty()) return rasterize(mesh, camera, tangents);
    std::filesystem::create_directories(cache_dir);
    auto path = gbuffer_cache_path(cache_dir, mesh_content_hash(mesh), camera);
    if (std::filesystem::exists(path)) return load_gbuffer(path);
    GBuffer gb = rasterize(mesh, camera, tangents);
    save_gbuffer(gb, path);
    return gb;
}

}  // namespace relight
