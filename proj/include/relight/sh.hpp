#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "relight/vec.hpp"

namespace relight::sh {

// Real spherical harmonics, orthonormal over the sphere, without the
// Condon-Shortley phase (the usual graphics convention):
//
//   y_l^0  = K_l^0 P_l(cos theta)
//   y_l^m  = sqrt(2) K_l^m cos(m phi) P_l^m(cos theta),   m > 0
//   y_l^-m = sqrt(2) K_l^m sin(m phi) P_l^m(cos theta),   m > 0
//   K_l^m  = sqrt((2l+1)/(4 pi) * (l-m)!/(l+m)!)
//
// with P_l^m the associated Legendre polynomials WITHOUT (-1)^m.
// Directions use z as the polar axis, phi = atan2(y, x).
//
// Flat index layout is k = l^2 + l + m, frozen; serialized files depend
// on it.

constexpr int kMaxOrder = 10;

constexpr int coeff_count(int order) { return (order + 1) * (order + 1); }
constexpr int sh_index(int l, int m) { return l * l + l + m; }

// Evaluates all (order+1)^2 basis values at a unit direction into `out`.
// Uses stable recurrences on normalized associated Legendre functions,
// good through order 10 and beyond. Throws on a non-unit direction.
void eval_basis(Vec3 dir, int order, double* out);
std::vector<double> eval_basis(Vec3 dir, int order);

// Zonal basis P~_l(t) = sqrt((2l+1)/(4 pi)) P_l(t), i.e. y_l^0 as a
// function of the cosine t to the zonal axis; (order+1) values.
void eval_zonal_basis(double cos_theta, int order, double* out);

// Zonal projection coefficients c_l = 2 pi * Int_{-1}^{1} f(t) P~_l(t) dt
// by midpoint quadrature over t.
std::vector<double> project_zonal(const std::function<double(double)>& f_of_cos, int order,
                                  int quad_samples = 4096);

// SH coefficient stack, one Rgb per basis index.
struct ShVector {
    int order = 0;
    std::vector<Rgb> coeffs;  // coeff_count(order) entries, k = l^2 + l + m

    ShVector() = default;
    explicit ShVector(int order_) : order(order_), coeffs(coeff_count(order_)) {}

    Rgb& at(int l, int m) { return coeffs[sh_index(l, m)]; }
    const Rgb& at(int l, int m) const { return coeffs[sh_index(l, m)]; }
};

// Radiance reconstruction Sum_k c_k y_k(dir). May be negative (ringing);
// callers clamp where the model requires it.
Rgb eval_radiance(const ShVector& sh, Vec3 dir);

using SphereFn = std::function<Rgb(Vec3)>;

// Projects a spherical function by an equirectangular Riemann sum with
// per-texel solid angle sin(theta) dtheta dphi; width = 2 * height.
ShVector project_equirect(const SphereFn& fn, int order, int height);

// Projects by uniform Monte Carlo over the sphere (seeded).
ShVector project_montecarlo(const SphereFn& fn, int order, std::size_t samples,
                            std::uint64_t seed);

// Estimated illumination c_k alongside the frozen stitched c'_k.
struct ShIllumination {
    ShVector current;
    ShVector initial;
};

// Per-band SH rotation matrices built from a 3x3 rotation by the
// Ivanic-Ruedenberg recurrence; rotate_sh(R, f) represents the function
// g(dir) = f(R^T dir).
class ShRotation {
  public:
    ShRotation(const Mat3& rotation, int order);

    // One scalar channel, coeff_count(order) values.
    void apply(const double* in, double* out) const;
    ShVector apply(const ShVector& sh) const;

    int order() const { return order_; }

  private:
    int order_;
    std::vector<std::vector<double>> bands_;  // bands_[l] is (2l+1)^2 row-major

    double band(int l, int i, int j) const { return bands_[l][i * (2 * l + 1) + j]; }
};

// Plain-text serialization: line "SH <order> <channels>" then one line
// per coefficient k with <channels> values, printed with %.17g so
// doubles round-trip exactly.
void save_sh(const ShVector& sh, const std::filesystem::path& path);
ShVector load_sh(const std::filesystem::path& path);

}  // namespace relight::sh
