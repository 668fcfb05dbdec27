#pragma once

#include <cmath>
#include <cstdint>

namespace relight {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
constexpr double kFourPi = 4.0 * kPi;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }
inline Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
inline Vec3 operator*(Vec3 a, double s) { return s * a; }
inline Vec3& operator+=(Vec3& a, Vec3 b) { a = a + b; return a; }

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double length(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(Vec3 a) {
    double len = length(a);
    return len > 0.0 ? (1.0 / len) * a : Vec3{0.0, 0.0, 0.0};
}
inline bool is_unit(Vec3 a, double tol = 1e-6) {
    return std::abs(dot(a, a) - 1.0) <= tol;
}
// Mirror reflection of a direction about a unit axis: 2(d.n)n - d.
inline Vec3 reflect_about(Vec3 d, Vec3 axis) {
    return 2.0 * dot(d, axis) * axis - d;
}

// Linear RGB triple; radiance or reflectance depending on context.
struct Rgb {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;

    double& operator[](int i) { return i == 0 ? r : (i == 1 ? g : b); }
    double operator[](int i) const { return i == 0 ? r : (i == 1 ? g : b); }
};

inline Rgb operator+(Rgb a, Rgb b) { return {a.r + b.r, a.g + b.g, a.b + b.b}; }
inline Rgb operator-(Rgb a, Rgb b) { return {a.r - b.r, a.g - b.g, a.b - b.b}; }
inline Rgb operator*(double s, Rgb a) { return {s * a.r, s * a.g, s * a.b}; }
inline Rgb operator*(Rgb a, double s) { return s * a; }
inline Rgb operator*(Rgb a, Rgb b) { return {a.r * b.r, a.g * b.g, a.b * b.b}; }
inline Rgb& operator+=(Rgb& a, Rgb b) { a = a + b; return a; }

inline double norm2(Rgb a) { return std::sqrt(a.r * a.r + a.g * a.g + a.b * a.b); }
inline double sum_abs(Rgb a) { return std::abs(a.r) + std::abs(a.g) + std::abs(a.b); }
inline Rgb max0(Rgb a) {
    return {a.r > 0.0 ? a.r : 0.0, a.g > 0.0 ? a.g : 0.0, a.b > 0.0 ? a.b : 0.0};
}
inline Rgb clamp01(Rgb a) {
    auto c = [](double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); };
    return {c(a.r), c(a.g), c(a.b)};
}
inline bool all_finite(Rgb a) {
    return std::isfinite(a.r) && std::isfinite(a.g) && std::isfinite(a.b);
}

// 3x3 matrix, row-major.
struct Mat3 {
    double m[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

    static Mat3 identity() { return Mat3{}; }
    static Mat3 from_columns(Vec3 c0, Vec3 c1, Vec3 c2) {
        Mat3 r;
        r.m[0][0] = c0.x; r.m[0][1] = c1.x; r.m[0][2] = c2.x;
        r.m[1][0] = c0.y; r.m[1][1] = c1.y; r.m[1][2] = c2.y;
        r.m[2][0] = c0.z; r.m[2][1] = c1.z; r.m[2][2] = c2.z;
        return r;
    }
    static Mat3 from_rows(Vec3 r0, Vec3 r1, Vec3 r2) {
        return from_columns(r0, r1, r2).transposed();
    }

    Vec3 row(int i) const { return {m[i][0], m[i][1], m[i][2]}; }
    Vec3 col(int j) const { return {m[0][j], m[1][j], m[2][j]}; }

    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
        return r;
    }

    double det() const {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    }
};

inline Vec3 operator*(const Mat3& a, Vec3 v) {
    return {a.m[0][0] * v.x + a.m[0][1] * v.y + a.m[0][2] * v.z,
            a.m[1][0] * v.x + a.m[1][1] * v.y + a.m[1][2] * v.z,
            a.m[2][0] * v.x + a.m[2][1] * v.y + a.m[2][2] * v.z};
}

inline Mat3 operator*(const Mat3& a, const Mat3& b) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            r.m[i][j] = a.m[i][0] * b.m[0][j] + a.m[i][1] * b.m[1][j] + a.m[i][2] * b.m[2][j];
        }
    return r;
}

// Rotation about a unit axis by angle (radians), Rodrigues form.
inline Mat3 axis_angle_rotation(Vec3 axis, double angle) {
    double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
    Vec3 a = normalized(axis);
    Mat3 r;
    r.m[0][0] = c + a.x * a.x * t;
    r.m[0][1] = a.x * a.y * t - a.z * s;
    r.m[0][2] = a.x * a.z * t + a.y * s;
    r.m[1][0] = a.y * a.x * t + a.z * s;
    r.m[1][1] = c + a.y * a.y * t;
    r.m[1][2] = a.y * a.z * t - a.x * s;
    r.m[2][0] = a.z * a.x * t - a.y * s;
    r.m[2][1] = a.z * a.y * t + a.x * s;
    r.m[2][2] = c + a.z * a.z * t;
    return r;
}

// Deterministic right-handed frame with `axis` as the third column.
// The first column is built from whichever world axis is least aligned
// with `axis`, so nearby axes give nearby frames almost everywhere.
inline Mat3 orthonormal_frame(Vec3 axis) {
    Vec3 n = normalized(axis);
    double ax = std::abs(n.x), ay = std::abs(n.y), az = std::abs(n.z);
    Vec3 ref = (ax <= ay && ax <= az) ? Vec3{1, 0, 0} : (ay <= az ? Vec3{0, 1, 0} : Vec3{0, 0, 1});
    Vec3 t = normalized(ref - dot(ref, n) * n);
    Vec3 b = cross(n, t);
    return Mat3::from_columns(t, b, n);
}

}  // namespace relight
