#pragma once

#include <cstdint>
#include <vector>

#include "relight/sh.hpp"
#include "relight/vec.hpp"

namespace relight {

// Diffuse and specular albedo textures, square, bilinear with
// clamp-to-edge addressing.
struct MaterialTextures {
    int resolution = 0;
    std::vector<Rgb> rho_d;
    std::vector<Rgb> rho_s;

    MaterialTextures() = default;
    explicit MaterialTextures(int res)
        : resolution(res), rho_d(static_cast<std::size_t>(res) * res),
          rho_s(static_cast<std::size_t>(res) * res) {}

    std::size_t texel_count() const { return rho_d.size(); }
};

// Per-texel light transport: full tangent-frame SH for the diffuse
// component, zonal SH about the mirror direction for the specular one.
// Scalar layout is [texel][channel][coefficient].
struct TransportField {
    int resolution = 0;
    int diffuse_order = 4;
    int specular_order = 8;
    bool softplus = false;  // optional nonnegativity reparameterization
    std::vector<double> t_d;  // res^2 * 3 * (diffuse_order+1)^2
    std::vector<double> t_s;  // res^2 * 3 * (specular_order+1)

    TransportField() = default;
    TransportField(int res, int l_d, int l_s)
        : resolution(res), diffuse_order(l_d), specular_order(l_s),
          t_d(static_cast<std::size_t>(res) * res * 3 * sh::coeff_count(l_d), 0.0),
          t_s(static_cast<std::size_t>(res) * res * 3 * (l_s + 1), 0.0) {}

    int diffuse_coeffs() const { return sh::coeff_count(diffuse_order); }
    int specular_coeffs() const { return specular_order + 1; }
    std::size_t texel_count() const { return static_cast<std::size_t>(resolution) * resolution; }
    const double* diffuse_at(std::size_t texel, int channel) const {
        return t_d.data() + (texel * 3 + channel) * diffuse_coeffs();
    }
    double* diffuse_at(std::size_t texel, int channel) {
        return t_d.data() + (texel * 3 + channel) * diffuse_coeffs();
    }
    const double* specular_at(std::size_t texel, int channel) const {
        return t_s.data() + (texel * 3 + channel) * specular_coeffs();
    }
    double* specular_at(std::size_t texel, int channel) {
        return t_s.data() + (texel * 3 + channel) * specular_coeffs();
    }
};

// The 4 enclosing texels and weights for a uv lookup; weights sum to 1,
// gradients scatter back through the same footprint.
struct BilinearFootprint {
    std::uint32_t texel[4];
    double weight[4];
};

BilinearFootprint bilinear_footprint(int resolution, Vec2 uv);

Rgb sample_bilinear(const std::vector<Rgb>& texture, const BilinearFootprint& fp);
Rgb sample_texture(const std::vector<Rgb>& texture, int resolution, Vec2 uv);

inline double softplus_fn(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
inline double softplus_grad(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// T_d at a tangent-space direction: per channel, interpolated coefficients
// dotted with the SH basis (basis precomputed by the caller).
Rgb eval_diffuse_transport(const TransportField& field, const BilinearFootprint& fp,
                           const double* basis);
// Convenience form over a direction list.
std::vector<Rgb> eval_diffuse_transport(const TransportField& field, Vec2 uv,
                                        const std::vector<Vec3>& tangent_dirs);

// T_s as a zonal expansion in cos(alpha) = dot(omega_i, mirror).
Rgb eval_specular_transport(const TransportField& field, const BilinearFootprint& fp,
                            const double* zonal);
std::vector<Rgb> eval_specular_transport(const TransportField& field, Vec2 uv,
                                         const std::vector<Vec3>& world_dirs, Vec3 normal,
                                         Vec3 view_dir);

// Zonal coefficients of the clamped cosine max(cos, 0), 1-D quadrature.
std::vector<double> clamped_cosine_zonal(int order);

struct InitialParameters {
    MaterialTextures textures;
    TransportField field;
};

// Albedos 0.5 everywhere; diffuse transport = clamped-cosine lobe about
// the tangent normal; specular transport = the same lobe shape scaled to
// a peak of 0.05. Deterministic.
InitialParameters init_parameters(int resolution, int diffuse_order, int specular_order);

}  // namespace relight
