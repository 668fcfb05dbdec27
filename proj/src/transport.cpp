#include "relight/transport.hpp"

#include <algorithm>
#include <cmath>

#include "relight/error.hpp"

namespace relight {

BilinearFootprint bilinearfootprint_impl(int res, Vec2 uv) {
    // Texel centers at (i + 0.5) / res; clamp-to-edge.
    double fx = uv.x * res - 0.5;
    double fy = uv.y * res - 0.5;
    int x0 = static_cast<int>(std::floor(fx));
    int y0 = static_cast<int>(std::floor(fy));
    double ax = fx - x0;
    double ay = fy - y0;
    auto clampi = [res](int v) { return std::clamp(v, 0, res - 1); };
    int x0c = clampi(x0), x1c = clampi(x0 + 1);
    int y0c = clampi(y0), y1c = clampi(y0 + 1);
    BilinearFootprint fp;
    fp.texel[0] = static_cast<std::uint32_t>(y0c) * res + x0c;
    fp.texel[1] = static_cast<std::uint32_t>(y0c) * res + x1c;
    fp.texel[2] = static_cast<std::uint32_t>(y1c) * res + x0c;
    fp.texel[3] = static_cast<std::uint32_t>(y1c) * res + x1c;
    fp.weight[0] = (1.0 - ax) * (1.0 - ay);
    fp.weight[1] = ax * (1.0 - ay);
    fp.weight[2] = (1.0 - ax) * ay;
    fp.weight[3] = ax * ay;
    return fp;
}

BilinearFootprint bilinear_footprint(int resolution, Vec2 uv) {
    require(resolution > 0, "bilinear_footprint: bad resolution");
    require(uv.x >= 0.0 && uv.x <= 1.0 && uv.y >= 0.0 && uv.y <= 1.0,
            "bilinear_footprint: uv out of [0,1]^2: (", uv.x, ", ", uv.y, ")");
    return bilinearfootprint_impl(resolution, uv);
}

Rgb sample_bilinear(const std::vector<Rgb>& texture, const BilinearFootprint& fp) {
    Rgb out;
    for (int i = 0; i < 4; ++i) out += fp.weight[i] * texture[fp.texel[i]];
    return out;
}

Rgb sample_texture(const std::vector<Rgb>& texture, int resolution, Vec2 uv) {
    return sample_bilinear(texture, bilinear_footprint(resolution, uv));
}

Rgb eval_diffuse_transport(const TransportField& field, const BilinearFootprint& fp,
                           const double* basis) {
    int n = field.diffuse_coeffs();
    Rgb out;
    for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = 0; i < 4; ++i) {
            const double* coeffs = field.diffuse_at(fp.texel[i], c);
            double dotv = 0.0;
            for (int k = 0; k < n; ++k) dotv += coeffs[k] * basis[k];
            acc += fp.weight[i] * dotv;
        }
        out[c] = field.softplus ? softplus_fn(acc) : acc;
    }
    return out;
}

std::vector<Rgb> eval_diffuse_transport(const TransportField& field, Vec2 uv,
                                        const std::vector<Vec3>& tangent_dirs) {
    BilinearFootprint fp = bilinear_footprint(field.resolution, uv);
    std::vector<double> basis(field.diffuse_coeffs());
    std::vector<Rgb> out;
    out.reserve(tangent_dirs.size());
    for (const Vec3& d : tangent_dirs) {
        sh::eval_basis(d, field.diffuse_order, basis.data());
        out.push_back(eval_diffuse_transport(field, fp, basis.data()));
    }
    return out;
}

Rgb eval_specular_transport(const TransportField& field, const BilinearFootprint& fp,
                            const double* zonal) {
    int n = field.specular_coeffs();
    Rgb out;
    for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = 0; i < 4; ++i) {
            const double* coeffs = field.specular_at(fp.texel[i], c);
            double dotv = 0.0;
            for (int l = 0; l < n; ++l) dotv += coeffs[l] * zonal[l];
            acc += fp.weight[i] * dotv;
        }
        out[c] = field.softplus ? softplus_fn(acc) : acc;
    }
    return out;
}

std::vector<Rgb> eval_specular_transport(const TransportField& field, Vec2 uv,
                                         const std::vector<Vec3>& world_dirs, Vec3 normal,
                                         Vec3 view_dir) {
    BilinearFootprint fp = bilinear_footprint(field.resolution, uv);
    Vec3 mirror = reflect_about(view_dir, normal);
    std::vector<double> zonal(field.specular_coeffs());
    std::vector<Rgb> out;
    out.reserve(world_dirs.size());
    for (const Vec3& d : world_dirs) {
        sh::eval_zonal_basis(dot(d, mirror), field.specular_order, zonal.data());
        out.push_back(eval_specular_transport(field, fp, zonal.data()));
    }
    return out;
}

std::vector<double> clamped_cosine_zonal(int order) {
    return sh::project_zonal([](double t) { return t > 0.0 ? t : 0.0; }, order, 1 << 15);
}

InitialParameters init_parameters(int resolution, int diffuse_order, int specular_order) {
    require(resolution > 0, "init_parameters: bad texture resolution");
    require(diffuse_order >= 0 && diffuse_order <= sh::kMaxOrder, "bad diffuse order");
    require(specular_order >= 0 && specular_order <= sh::kMaxOrder, "bad specular order");

    InitialParameters out;
    out.textures = MaterialTextures(resolution);
    std::fill(out.textures.rho_d.begin(), out.textures.rho_d.end(), Rgb{0.5, 0.5, 0.5});
    std::fill(out.textures.rho_s.begin(), out.textures.rho_s.end(), Rgb{0.5, 0.5, 0.5});

    out.field = TransportField(resolution, diffuse_order, specular_order);

    std::vector<double> lobe_d = clamped_cosine_zonal(diffuse_order);
    std::vector<double> lobe_s = clamped_cosine_zonal(specular_order);
    // Scale the specular lobe so its reconstruction peaks at 0.05.
    std::vector<double> zonal_at_peak(specular_order + 1);
    sh::eval_zonal_basis(1.0, specular_order, zonal_at_peak.data());
    double peak = 0.0;
    for (int l = 0; l <= specular_order; ++l) peak += lobe_s[l] * zonal_at_peak[l];
    double scale = 0.05 / peak;
    for (double& v : lobe_s) v *= scale;

    for (std::size_t texel = 0; texel < out.field.texel_count(); ++texel) {
        for (int c = 0; c < 3; ++c) {
            double* d = out.field.diffuse_at(texel, c);
            for (int l = 0; l <= diffuse_order; ++l) d[sh::sh_index(l, 0)] = lobe_d[l];
            double* s = out.field.specular_at(texel, c);
            for (int l = 0; l <= specular_order; ++l) s[l] = lobe_s[l];
        }
    }
    return out;
}

}  // namespace relight
