#pragma once

#include <filesystem>

#include "relight/equirect.hpp"
#include "relight/image.hpp"
#include "relight/scene.hpp"
#include "relight/sh.hpp"

namespace relight {

// Equirectangular radiance map with per-texel coverage (width = 2 * height).
struct EnvironmentMap {
    int width = 0;
    int height = 0;
    ImageRgb texels;
    MaskImage coverage;

    EnvironmentMap() = default;
    explicit EnvironmentMap(int height_)
        : width(2 * height_), height(height_), texels(2 * height_, height_),
          coverage(2 * height_, height_, 0) {}

    bool covered_at(Vec3 dir) const {
        int ix, iy;
        equirect_texel_of(dir, width, height, ix, iy);
        return coverage.at(ix, iy) != 0;
    }
    Rgb nearest(Vec3 dir) const {
        int ix, iy;
        equirect_texel_of(dir, width, height, ix, iy);
        return texels.at(ix, iy);
    }
};

// Maps every background (mask-false) pixel of every view along its camera
// ray into the map (distant-background assumption) and takes the
// per-channel lower median of the contributions at each texel.
EnvironmentMap stitch_environment(const SceneDataset& dataset, int map_height);

// Masked equirect projection of the map; uncovered texels contribute zero.
// Both `initial` and `current` start from the projection.
sh::ShIllumination init_illumination(const EnvironmentMap& env, int order = 10);

// PFM radiance plus a sibling "<stem>_coverage.png" mask.
void save_environment(const EnvironmentMap& env, const std::filesystem::path& pfm_path);
EnvironmentMap load_environment(const std::filesystem::path& pfm_path);

// Full-coverage map sampled from an SH vector (relighting input path).
EnvironmentMap environment_from_sh(const sh::ShVector& light, int height);

}  // namespace relight
