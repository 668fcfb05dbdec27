#pragma once

#include <algorithm>
#include <cmath>

#include "relight/vec.hpp"

namespace relight {

// Equirectangular parameterization with +Y as the zenith:
//   v = acos(y) / pi                     in [0, 1]
//   u = (atan2(x, -z) + pi) / (2 pi)     in [0, 1)
// so (0,0,-1) maps to (0.5, 0.5). At the poles u is defined as 0.5.

inline Vec2 direction_to_equirect(Vec3 dir) {
    double y = std::clamp(dir.y, -1.0, 1.0);
    double v = std::acos(y) / kPi;
    double s2 = dir.x * dir.x + dir.z * dir.z;
    if (s2 < 1e-24) return {0.5, v};
    double u = (std::atan2(dir.x, -dir.z) + kPi) / kTwoPi;
    if (u >= 1.0) u -= 1.0;
    return {u, v};
}

inline Vec3 equirect_uv_to_direction(double u, double v) {
    double theta = kPi * v;
    double alpha = kTwoPi * u - kPi;
    double s = std::sin(theta);
    return {s * std::sin(alpha), std::cos(theta), -s * std::cos(alpha)};
}

inline Vec3 equirect_texel_dir(int ix, int iy, int width, int height) {
    return equirect_uv_to_direction((ix + 0.5) / width, (iy + 0.5) / height);
}

// Nearest-texel bin of a direction; exact inverse of equirect_texel_dir
// at texel centers.
inline void equirect_texel_of(Vec3 dir, int width, int height, int& ix, int& iy) {
    Vec2 uv = direction_to_equirect(dir);
    ix = std::clamp(static_cast<int>(uv.x * width), 0, width - 1);
    iy = std::clamp(static_cast<int>(uv.y * height), 0, height - 1);
}

// Solid angle of one texel row: sin(theta) * dtheta * dphi.
inline double equirect_texel_solid_angle(int iy, int width, int height) {
    double theta = kPi * (iy + 0.5) / height;
    return std::sin(theta) * (kPi / height) * (kTwoPi / width);
}

}  // namespace relight
