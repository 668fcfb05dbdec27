#include "relight/sh.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "relight/equirect.hpp"
#include "relight/error.hpp"
#include "relight/parallel.hpp"
#include "relight/rng.hpp"

namespace relight::sh {

namespace {

constexpr double kY00 = 0.28209479177387814;  // 1 / (2 sqrt(pi))

// Normalized associated Legendre values N_l^m(z) for 0 <= m <= l <= order,
// where N_l^m = K_l^m P_l^m (no Condon-Shortley phase). `s` is sin(theta).
// Output indexed by l*(l+1)/2 + m.
void eval_normalized_legendre(double z, double s, int order, double* n) {
    auto idx = [](int l, int m) { return l * (l + 1) / 2 + m; };
    n[0] = kY00;
    for (int m = 1; m <= order; ++m) {
        n[idx(m, m)] = n[idx(m - 1, m - 1)] * s * std::sqrt((2.0 * m + 1.0) / (2.0 * m));
    }
    for (int m = 0; m < order; ++m) {
        n[idx(m + 1, m)] = z * std::sqrt(2.0 * m + 3.0) * n[idx(m, m)];
    }
    for (int m = 0; m <= order; ++m) {
        for (int l = m + 2; l <= order; ++l) {
            double c1 = std::sqrt(((2.0 * l - 1.0) * (2.0 * l + 1.0)) /
                                  (static_cast<double>(l - m) * (l + m)));
            double c2 = std::sqrt(((2.0 * l + 1.0) * (l - 1.0 - m) * (l - 1.0 + m)) /
                                  ((2.0 * l - 3.0) * (l - m) * (l + m)));
            n[idx(l, m)] = c1 * z * n[idx(l - 1, m)] - c2 * n[idx(l - 2, m)];
        }
    }
}

}  // namespace

void eval_basis(Vec3 dir, int order, double* out) {
    require(order >= 0 && order <= kMaxOrder, "sh order out of range: ", order);
    require(is_unit(dir), "eval_basis: direction is not unit length");

    double z = dir.z;
    double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    double cphi = 1.0, sphi = 0.0;
    if (s > 1e-12) {
        cphi = dir.x / s;
        sphi = dir.y / s;
    }

    double legendre[(kMaxOrder + 1) * (kMaxOrder + 2) / 2];
    eval_normalized_legendre(z, s, order, legendre);
    auto idx = [](int l, int m) { return l * (l + 1) / 2 + m; };

    // cos(m phi), sin(m phi) by the angle-addition recurrence.
    double cm[kMaxOrder + 1], sm[kMaxOrder + 1];
    cm[0] = 1.0;
    sm[0] = 0.0;
    for (int m = 1; m <= order; ++m) {
        cm[m] = cm[m - 1] * cphi - sm[m - 1] * sphi;
        sm[m] = sm[m - 1] * cphi + cm[m - 1] * sphi;
    }

    const double sqrt2 = std::sqrt(2.0);
    for (int l = 0; l <= order; ++l) {
        out[sh_index(l, 0)] = legendre[idx(l, 0)];
        for (int m = 1; m <= l; ++m) {
            double nv = sqrt2 * legendre[idx(l, m)];
            out[sh_index(l, m)] = nv * cm[m];
            out[sh_index(l, -m)] = nv * sm[m];
        }
    }
}

std::vector<double> eval_basis(Vec3 dir, int order) {
    std::vector<double> out(coeff_count(order));
    eval_basis(dir, order, out.data());
    return out;
}

void eval_zonal_basis(double cos_theta, int order, double* out) {
    require(order >= 0, "zonal order must be nonnegative");
    double z = std::clamp(cos_theta, -1.0, 1.0);
    out[0] = kY00;
    if (order == 0) return;
    out[1] = std::sqrt(3.0) * kY00 * z;
    for (int l = 2; l <= order; ++l) {
        double c1 = std::sqrt((2.0 * l - 1.0) * (2.0 * l + 1.0)) / l;
        double c2 = (l - 1.0) / l * std::sqrt((2.0 * l + 1.0) / (2.0 * l - 3.0));
        out[l] = c1 * z * out[l - 1] - c2 * out[l - 2];
    }
}

std::vector<double> project_zonal(const std::function<double(double)>& f_of_cos, int order,
                                  int quad_samples) {
    require(quad_samples > 0, "project_zonal: need at least one quadrature sample");
    std::vector<double> coeffs(order + 1, 0.0);
    std::vector<double> basis(order + 1);
    double dt = 2.0 / quad_samples;
    for (int i = 0; i < quad_samples; ++i) {
        double t = -1.0 + (i + 0.5) * dt;
        eval_zonal_basis(t, order, basis.data());
        double f = f_of_cos(t);
        for (int l = 0; l <= order; ++l) coeffs[l] += f * basis[l] * dt;
    }
    for (int l = 0; l <= order; ++l) coeffs[l] *= kTwoPi;
    return coeffs;
}

Rgb eval_radiance(const ShVector& sh, Vec3 dir) {
    double basis[coeff_count(kMaxOrder)];
    eval_basis(dir, sh.order, basis);
    Rgb out;
    for (int k = 0; k < coeff_count(sh.order); ++k) out += basis[k] * sh.coeffs[k];
    return out;
}

ShVector project_equirect(const SphereFn& fn, int order, int height) {
    require(height > 0, "project_equirect: zero resolution");
    int width = 2 * height;
    int n = coeff_count(order);

    // Rows are independent; accumulate per row, combine in row order.
    std::vector<ShVector> row_sums(height, ShVector(order));
    parallel_ranges(static_cast<std::size_t>(height), 8, [&](std::size_t lo, std::size_t hi, std::size_t) {
        std::vector<double> basis(n);
        for (std::size_t iy = lo; iy < hi; ++iy) {
            double dw = equirect_texel_solid_angle(static_cast<int>(iy), width, height);
            ShVector& acc = row_sums[iy];
            for (int ix = 0; ix < width; ++ix) {
                Vec3 dir = equirect_texel_dir(ix, static_cast<int>(iy), width, height);
                Rgb value = fn(dir);
                eval_basis(dir, order, basis.data());
                for (int k = 0; k < n; ++k) acc.coeffs[k] += (basis[k] * dw) * value;
            }
        }
    });

    ShVector out(order);
    for (int iy = 0; iy < height; ++iy)
        for (int k = 0; k < n; ++k) out.coeffs[k] += row_sums[iy].coeffs[k];
    return out;
}

ShVector project_montecarlo(const SphereFn& fn, int order, std::size_t samples,
                            std::uint64_t seed) {
    require(samples > 0, "project_montecarlo: zero samples");
    int n = coeff_count(order);
    ShVector out(order);
    std::mt19937_64 rng(seed);
    std::vector<double> basis(n);
    for (std::size_t i = 0; i < samples; ++i) {
        Vec3 dir = uniform_sphere_dir(rng);
        Rgb value = fn(dir);
        eval_basis(dir, order, basis.data());
        for (int k = 0; k < n; ++k) out.coeffs[k] += basis[k] * value;
    }
    double w = kFourPi / static_cast<double>(samples);
    for (int k = 0; k < n; ++k) out.coeffs[k] = w * out.coeffs[k];
    return out;
}

// ---------------------------------------------------------------------------
// Rotation (Ivanic & Ruedenberg recurrence)

namespace {

inline double kdelta(int a, int b) { return a == b ? 1.0 : 0.0; }

struct BandTable {
    const std::vector<std::vector<double>>& bands;
    double get(int l, int m, int n) const { return bands[l][(m + l) * (2 * l + 1) + (n + l)]; }
};

double ir_P(const BandTable& t, int i, int a, int b, int l) {
    if (b == l) {
        return t.get(1, i, 1) * t.get(l - 1, a, l - 1) - t.get(1, i, -1) * t.get(l - 1, a, -l + 1);
    }
    if (b == -l) {
        return t.get(1, i, 1) * t.get(l - 1, a, -l + 1) + t.get(1, i, -1) * t.get(l - 1, a, l - 1);
    }
    return t.get(1, i, 0) * t.get(l - 1, a, b);
}

double ir_U(const BandTable& t, int m, int n, int l) { return ir_P(t, 0, m, n, l); }

double ir_V(const BandTable& t, int m, int n, int l) {
    if (m == 0) return ir_P(t, 1, 1, n, l) + ir_P(t, -1, -1, n, l);
    if (m > 0) {
        return ir_P(t, 1, m - 1, n, l) * std::sqrt(1.0 + kdelta(m, 1)) -
               ir_P(t, -1, -m + 1, n, l) * (1.0 - kdelta(m, 1));
    }
    return ir_P(t, 1, m + 1, n, l) * (1.0 - kdelta(m, -1)) +
           ir_P(t, -1, -m - 1, n, l) * std::sqrt(1.0 + kdelta(m, -1));
}

double ir_W(const BandTable& t, int m, int n, int l) {
    if (m == 0) return 0.0;
    if (m > 0) return ir_P(t, 1, m + 1, n, l) + ir_P(t, -1, -m - 1, n, l);
    return ir_P(t, 1, m - 1, n, l) - ir_P(t, -1, -m + 1, n, l);
}

}  // namespace

ShRotation::ShRotation(const Mat3& rotation, int order) : order_(order) {
    require(order >= 0 && order <= kMaxOrder, "ShRotation order out of range: ", order);
    bands_.resize(order + 1);
    bands_[0] = {1.0};
    if (order == 0) return;

    // Band 1 is the rotation itself permuted into the (y, z, x) SH order.
    static const int axis[3] = {1, 2, 0};
    bands_[1].resize(9);
    for (int m = -1; m <= 1; ++m)
        for (int n = -1; n <= 1; ++n)
            bands_[1][(m + 1) * 3 + (n + 1)] = rotation.m[axis[m + 1]][axis[n + 1]];

    BandTable table{bands_};
    for (int l = 2; l <= order; ++l) {
        bands_[l].assign((2 * l + 1) * (2 * l + 1), 0.0);
        for (int m = -l; m <= l; ++m) {
            for (int n = -l; n <= l; ++n) {
                double denom = (std::abs(n) == l) ? (2.0 * l) * (2.0 * l - 1.0)
                                                  : static_cast<double>(l + n) * (l - n);
                int am = std::abs(m);
                double u = std::sqrt(static_cast<double>(l + m) * (l - m) / denom);
                double v = 0.5 *
                           std::sqrt((1.0 + kdelta(m, 0)) * (l + am - 1.0) * (l + am) / denom) *
                           (1.0 - 2.0 * kdelta(m, 0));
                double w = -0.5 * std::sqrt((l - am - 1.0) * (l - am) / denom) *
                           (1.0 - kdelta(m, 0));
                double e = 0.0;
                if (u != 0.0) e += u * ir_U(table, m, n, l);
                if (v != 0.0) e += v * ir_V(table, m, n, l);
                if (w != 0.0) e += w * ir_W(table, m, n, l);
                bands_[l][(m + l) * (2 * l + 1) + (n + l)] = e;
            }
        }
    }
}

void ShRotation::apply(const double* in, double* out) const {
    for (int l = 0; l <= order_; ++l) {
        int base = l * l;
        int size = 2 * l + 1;
        for (int i = 0; i < size; ++i) {
            double acc = 0.0;
            const double* row = bands_[l].data() + i * size;
            for (int j = 0; j < size; ++j) acc += row[j] * in[base + j];
            out[base + i] = acc;
        }
    }
}

ShVector ShRotation::apply(const ShVector& sh) const {
    require(sh.order == order_, "ShRotation/ShVector order mismatch");
    int n = coeff_count(order_);
    std::vector<double> in(n), out(n);
    ShVector result(order_);
    for (int c = 0; c < 3; ++c) {
        for (int k = 0; k < n; ++k) in[k] = sh.coeffs[k][c];
        apply(in.data(), out.data());
        for (int k = 0; k < n; ++k) result.coeffs[k][c] = out[k];
    }
    return result;
}

// ---------------------------------------------------------------------------
// Serialization

void save_sh(const ShVector& sh, const std::filesystem::path& path) {
    std::ofstream f(path);
    require(f.good(), "cannot open for writing: ", path.string());
    f << "SH " << sh.order << " 3\n";
    char buf[96];
    for (const Rgb& c : sh.coeffs) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", c.r, c.g, c.b);
        f << buf;
    }
    require(f.good(), "write failed: ", path.string());
}

ShVector load_sh(const std::filesystem::path& path) {
    std::ifstream f(path);
    require(f.good(), "cannot open SH file: ", path.string());
    std::string magic;
    int order = -1, channels = 0;
    f >> magic >> order >> channels;
    require(f.good() && magic == "SH", "not an SH file: ", path.string());
    require(order >= 0 && order <= kMaxOrder, path.string(), ": bad SH order ", order);
    require(channels == 3, path.string(), ": expected 3 channels, got ", channels);
    ShVector sh(order);
    for (Rgb& c : sh.coeffs) {
        f >> c.r >> c.g >> c.b;
    }
    require(!f.fail(), "truncated SH file: ", path.string());
    return sh;
}

}  // namespace relight::sh
