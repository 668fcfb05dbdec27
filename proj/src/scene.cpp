#include "relight/scene.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "relight/error.hpp"
#include "relight/rng.hpp"

namespace relight {

using nlohmann::json;

const Camera& SceneDataset::camera_of(const ViewImage& view) const {
    for (const Camera& c : cameras) {
        if (c.id == view.camera_id) return c;
    }
    fail("no camera with id ", view.camera_id);
}

std::string view_image_name(int camera_id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "view_%04d", camera_id);
    return buf;
}

// ---------------------------------------------------------------------------
// Validation

void validate_camera(const Camera& camera) {
    require(camera.fx > 0 && camera.fy > 0, "camera ", camera.id, ": focal lengths must be positive");
    require(camera.width > 0 && camera.height > 0, "camera ", camera.id, ": bad image size");
    require(camera.cx >= 0 && camera.cx < camera.width, "camera ", camera.id,
            ": principal point cx out of range");
    require(camera.cy >= 0 && camera.cy < camera.height, "camera ", camera.id,
            ": principal point cy out of range");

    const Mat3& r = camera.rotation;
    Mat3 rtr = r.transposed() * r;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double expect = i == j ? 1.0 : 0.0;
            require(std::abs(rtr.m[i][j] - expect) < 1e-5, "camera ", camera.id,
                    ": rotation block is not orthonormal");
        }
    }
    require(std::abs(r.det() - 1.0) < 1e-5, "camera ", camera.id,
            ": rotation determinant is not +1 (reflection?)");
}

void validate_mesh(const Mesh& mesh) {
    require(!mesh.vertices.empty(), "mesh has no vertices");
    require(!mesh.faces.empty(), "mesh has no faces");
    require(mesh.normals.size() == mesh.vertices.size(), "mesh normal count mismatch");
    require(mesh.face_uvs.size() == mesh.faces.size(), "face ", mesh.face_uvs.size(),
            ": face without uv coordinates");
    int n = static_cast<int>(mesh.vertices.size());
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        for (int c = 0; c < 3; ++c) {
            int v = mesh.faces[f][c];
            require(v >= 0 && v < n, "face ", f, ": vertex index ", v, " out of range");
        }
    }
    for (std::size_t i = 0; i < mesh.normals.size(); ++i) {
        require(std::abs(dot(mesh.normals[i], mesh.normals[i]) - 1.0) < 1e-4,
                "vertex ", i, ": normal is not unit length");
    }
}

std::vector<Vec3> compute_vertex_normals(const std::vector<Vec3>& vertices,
                                         const std::vector<std::array<int, 3>>& faces) {
    std::vector<Vec3> normals(vertices.size(), Vec3{0, 0, 0});
    for (const auto& f : faces) {
        Vec3 e1 = vertices[f[1]] - vertices[f[0]];
        Vec3 e2 = vertices[f[2]] - vertices[f[0]];
        Vec3 area_normal = cross(e1, e2);  // magnitude = 2 * area
        for (int c = 0; c < 3; ++c) normals[f[c]] += area_normal;
    }
    for (std::size_t i = 0; i < normals.size(); ++i) {
        double len = length(normals[i]);
        require(len > 1e-12, "vertex ", i, ": degenerate normal (no incident face area)");
        normals[i] = (1.0 / len) * normals[i];
    }
    return normals;
}

// ---------------------------------------------------------------------------
// OBJ

Mesh load_obj(const std::filesystem::path& path) {
    std::ifstream f(path);
    require(f.good(), "cannot open OBJ: ", path.string());
    std::vector<Vec3> positions, file_normals;
    std::vector<Vec2> uvs;
    Mesh mesh;
    std::vector<std::array<int, 3>> corner_normals;  // vn index per corner, -1 if absent
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            Vec3 p;
            ss >> p.x >> p.y >> p.z;
            require(!ss.fail(), path.string(), ":", line_no, ": malformed vertex");
            positions.push_back(p);
        } else if (tag == "vt") {
            Vec2 t;
            ss >> t.x >> t.y;
            require(!ss.fail(), path.string(), ":", line_no, ": malformed texcoord");
            uvs.push_back(t);
        } else if (tag == "vn") {
            Vec3 n;
            ss >> n.x >> n.y >> n.z;
            require(!ss.fail(), path.string(), ":", line_no, ": malformed normal");
            file_normals.push_back(n);
        } else if (tag == "f") {
            struct Corner {
                int v = -1, vt = -1, vn = -1;
            };
            std::vector<Corner> corners;
            std::string word;
            while (ss >> word) {
                Corner c;
                int fields[3] = {-1, -1, -1};
                std::size_t start = 0;
                for (int fi = 0; fi < 3 && start <= word.size(); ++fi) {
                    std::size_t slash = word.find('/', start);
                    std::string part = word.substr(start, slash == std::string::npos
                                                               ? std::string::npos
                                                               : slash - start);
                    if (!part.empty()) fields[fi] = std::stoi(part);
                    if (slash == std::string::npos) break;
                    start = slash + 1;
                }
                c.v = fields[0];
                c.vt = fields[1];
                c.vn = fields[2];
                require(c.v >= 1, path.string(), ":", line_no, ": bad face corner '", word, "'");
                corners.push_back(c);
            }
            require(corners.size() >= 3, path.string(), ":", line_no, ": face with <3 corners");
            for (std::size_t i = 2; i < corners.size(); ++i) {  // fan triangulation
                const Corner tri[3] = {corners[0], corners[i - 1], corners[i]};
                std::array<int, 3> vidx;
                std::array<Vec2, 3> fuv;
                std::array<int, 3> nidx;
                for (int c = 0; c < 3; ++c) {
                    vidx[c] = tri[c].v - 1;
                    require(tri[c].vt >= 1, path.string(), ":", line_no,
                            ": face without uv coordinates");
                    require(tri[c].vt <= static_cast<int>(uvs.size()), path.string(), ":", line_no,
                            ": vt index out of range");
                    fuv[c] = uvs[tri[c].vt - 1];
                    nidx[c] = tri[c].vn - 1;
                }
                mesh.faces.push_back(vidx);
                mesh.face_uvs.push_back(fuv);
                corner_normals.push_back(nidx);
            }
        }
    }
    mesh.vertices = std::move(positions);

    bool all_have_vn = !corner_normals.empty();
    for (const auto& cn : corner_normals) {
        if (cn[0] < 0 || cn[1] < 0 || cn[2] < 0) all_have_vn = false;
    }
    if (all_have_vn && !file_normals.empty()) {
        // Average the referenced file normals onto vertices.
        std::vector<Vec3> acc(mesh.vertices.size(), Vec3{0, 0, 0});
        for (std::size_t fidx = 0; fidx < mesh.faces.size(); ++fidx) {
            for (int c = 0; c < 3; ++c) {
                int vn = corner_normals[fidx][c];
                require(vn < static_cast<int>(file_normals.size()), path.string(),
                        ": vn index out of range in face ", fidx);
                acc[mesh.faces[fidx][c]] += file_normals[vn];
            }
        }
        mesh.normals.resize(acc.size());
        for (std::size_t i = 0; i < acc.size(); ++i) {
            double len = length(acc[i]);
            require(len > 1e-12, "vertex ", i, ": zero-length normal in OBJ");
            mesh.normals[i] = (1.0 / len) * acc[i];
        }
    } else {
        mesh.normals = compute_vertex_normals(mesh.vertices, mesh.faces);
    }
    validate_mesh(mesh);
    return mesh;
}

void save_obj(const Mesh& mesh, const std::filesystem::path& path) {
    std::ofstream f(path);
    require(f.good(), "cannot open for writing: ", path.string());
    char buf[160];
    for (const Vec3& v : mesh.vertices) {
        std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
        f << buf;
    }
    // One vt per corner, emitted in face order.
    for (const auto& fuv : mesh.face_uvs) {
        for (const Vec2& t : fuv) {
            std::snprintf(buf, sizeof(buf), "vt %.9g %.9g\n", t.x, t.y);
            f << buf;
        }
    }
    for (const Vec3& n : mesh.normals) {
        std::snprintf(buf, sizeof(buf), "vn %.9g %.9g %.9g\n", n.x, n.y, n.z);
        f << buf;
    }
    for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
        const auto& face = mesh.faces[i];
        f << "f";
        for (int c = 0; c < 3; ++c) {
            f << " " << face[c] + 1 << "/" << 3 * i + c + 1 << "/" << face[c] + 1;
        }
        f << "\n";
    }
    require(f.good(), "write failed: ", path.string());
}

// ---------------------------------------------------------------------------
// cameras.json

namespace {

Camera camera_from_json(const json& j) {
    Camera c;
    c.id = j.at("id").get<int>();
    c.fx = j.at("fx").get<double>();
    c.fy = j.at("fy").get<double>();
    c.cx = j.at("cx").get<double>();
    c.cy = j.at("cy").get<double>();
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    const auto& e = j.at("extrinsic");
    require(e.is_array() && e.size() == 12, "camera ", c.id, ": extrinsic must have 12 numbers");
    for (int row = 0; row < 3; ++row)
        for (int col = 0; col < 3; ++col) c.rotation.m[row][col] = e[4 * row + col].get<double>();
    c.translation = Vec3{e[3].get<double>(), e[7].get<double>(), e[11].get<double>()};
    return c;
}

json camera_to_json(const Camera& c) {
    json e = json::array();
    for (int row = 0; row < 3; ++row) {
        for (int col = 0; col < 3; ++col) e.push_back(c.rotation.m[row][col]);
        e.push_back(row == 0 ? c.translation.x : (row == 1 ? c.translation.y : c.translation.z));
    }
    return json{{"id", c.id},         {"fx", c.fx},       {"fy", c.fy},
                {"cx", c.cx},         {"cy", c.cy},       {"width", c.width},
                {"height", c.height}, {"extrinsic", e}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Dataset load/save/split

SceneDataset load_scene(const std::filesystem::path& root, bool srgb_8bit) {
    namespace fs = std::filesystem;
    SceneDataset ds;

    fs::path cam_path = root / "cameras.json";
    require(fs::exists(cam_path), "missing file: ", cam_path.string());
    std::ifstream cf(cam_path);
    json cams;
    try {
        cf >> cams;
    } catch (const json::exception& e) {
        fail(cam_path.string(), ": JSON parse error: ", e.what());
    }
    require(cams.is_array() && !cams.empty(), cam_path.string(), ": expected nonempty array");
    for (const auto& j : cams) {
        Camera c = camera_from_json(j);
        validate_camera(c);
        ds.cameras.push_back(c);
    }

    fs::path obj_path = root / "proxy.obj";
    require(fs::exists(obj_path), "missing file: ", obj_path.string());
    ds.mesh = load_obj(obj_path);

    for (const Camera& cam : ds.cameras) {
        ViewImage view;
        view.camera_id = cam.id;
        fs::path pfm = root / "images" / (view_image_name(cam.id) + ".pfm");
        fs::path png = root / "images" / (view_image_name(cam.id) + ".png");
        if (fs::exists(pfm)) {
            view.pixels = read_pfm(pfm);
        } else if (fs::exists(png)) {
            view.pixels = read_png_rgb(png, srgb_8bit);
        } else {
            fail("missing image for camera ", cam.id, ": ", pfm.string(), " (or .png)");
        }
        require(view.pixels.width == cam.width && view.pixels.height == cam.height,
                "camera ", cam.id, ": image size ", view.pixels.width, "x", view.pixels.height,
                " does not match camera ", cam.width, "x", cam.height);

        fs::path mask_path = root / "masks" / (view_image_name(cam.id) + ".png");
        require(fs::exists(mask_path), "missing mask: ", mask_path.string());
        view.mask = read_png_mask(mask_path);
        require(view.mask.width == cam.width && view.mask.height == cam.height,
                "camera ", cam.id, ": mask size does not match camera");
        ds.views.push_back(std::move(view));
    }

    // Default split: everything trains until split_views is called.
    ds.train_ids.resize(ds.views.size());
    for (std::size_t i = 0; i < ds.views.size(); ++i) ds.train_ids[i] = static_cast<int>(i);
    return ds;
}

void save_scene(const SceneDataset& dataset, const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    fs::create_directories(root / "images");
    fs::create_directories(root / "masks");

    json cams = json::array();
    for (const Camera& c : dataset.cameras) cams.push_back(camera_to_json(c));
    std::ofstream cf(root / "cameras.json");
    require(cf.good(), "cannot write cameras.json under ", root.string());
    cf << cams.dump(2) << "\n";

    save_obj(dataset.mesh, root / "proxy.obj");
    for (const ViewImage& view : dataset.views) {
        write_pfm(root / "images" / (view_image_name(view.camera_id) + ".pfm"), view.pixels);
        write_png_gray(root / "masks" / (view_image_name(view.camera_id) + ".png"), view.mask);
    }
}

SceneDataset split_views(SceneDataset dataset, double test_fraction, std::uint64_t seed) {
    require(test_fraction > 0.0 && test_fraction < 1.0, "test_fraction must be in (0, 1)");
    std::size_t n = dataset.views.size();
    require(n >= 2, "need at least 2 views to split, have ", n);

    std::vector<int> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<int>(i);
    std::mt19937_64 rng(seed);
    // Fisher-Yates with our own uniform draw so the shuffle is portable.
    for (std::size_t i = n - 1; i > 0; --i) {
        std::size_t j = static_cast<std::size_t>(uniform_double(rng) * (i + 1));
        if (j > i) j = i;
        std::swap(ids[i], ids[j]);
    }

    std::size_t test_count = static_cast<std::size_t>(std::lround(test_fraction * n));
    test_count = std::clamp<std::size_t>(test_count, 1, n - 1);
    dataset.test_ids.assign(ids.begin(), ids.begin() + test_count);
    dataset.train_ids.assign(ids.begin() + test_count, ids.end());
    std::sort(dataset.test_ids.begin(), dataset.test_ids.end());
    std::sort(dataset.train_ids.begin(), dataset.train_ids.end());
    return dataset;
}

// FNV-1a over the raw geometry buffers.
std::uint64_t mesh_content_hash(const Mesh& mesh) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix_bytes = [&h](const void* data, std::size_t size) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    };
    mix_bytes(mesh.vertices.data(), mesh.vertices.size() * sizeof(Vec3));
    mix_bytes(mesh.normals.data(), mesh.normals.size() * sizeof(Vec3));
    mix_bytes(mesh.faces.data(), mesh.faces.size() * sizeof(std::array<int, 3>));
    mix_bytes(mesh.face_uvs.data(), mesh.face_uvs.size() * sizeof(std::array<Vec2, 3>));
    return h;
}

}  // namespace relight
