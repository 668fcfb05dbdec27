#pragma once

#include <cstdint>
#include <vector>

#include "relight/envmap.hpp"
#include "relight/image.hpp"
#include "relight/sh.hpp"
#include "relight/transport.hpp"

namespace relight {

struct LossWeights {
    double lambda_chr = 1.0;
    double lambda_illum = 1.0;
    double lambda_alb = 1.0;
};

struct LossReport {
    double im = 0.0;
    double chr = 0.0;
    double illum = 0.0;
    double alb = 0.0;
    double total = 0.0;
    std::size_t p = 0;  // directions inside coverage (illumination loss)
    std::size_t q = 0;  // texel count (albedo loss)
};

// Mean over masked pixels of the per-pixel l1 across channels.
double image_loss(const ImageRgb& rendered, const ImageRgb& target, const MaskImage& mask);

// Raw per-sample transports of one view, per masked pixel (diffuse and
// specular sets kept separate; the chromaticity loss normalizes each by
// its own sample count before summing).
struct TransportSamples {
    int m_d = 0;
    int m_s = 0;
    std::vector<std::uint32_t> pixels;
    std::vector<Rgb> diffuse;   // pixels.size() * m_d
    std::vector<Rgb> specular;  // pixels.size() * m_s
};

// Samples with ||T||_2 below this contribute nothing to the chromaticity
// loss or the mean chroma.
constexpr double kChromaEps = 1e-8;

// Weighted chromaticity spread: (1/(n m)) Sum_x Sum_w w(x) (1 - T'.T'_mean),
// w(x) = min(20 ||I_target(x)||_2, 1).
double chromaticity_loss(const TransportSamples& transports, const ImageRgb& target,
                         const MaskImage& mask);

// Frozen direction set for the illumination loss (Eq-7-style): seeded
// uniform sphere directions filtered by the stitched coverage, with
// basis rows precomputed once.
struct IlluminationLossContext {
    std::vector<Vec3> dirs;            // kept directions only
    std::vector<double> basis;         // dirs.size() x coeff_count(order), row-major
    int order = 10;
    std::size_t total_sampled = 0;     // before the coverage filter

    static IlluminationLossContext make(const MaskImage& coverage, int env_width, int env_height,
                                        int order, int dir_count, std::uint64_t seed);
};

// Mean over kept directions of the l1 across channels between the current
// and initial reconstructions. Zero (with p = 0) when nothing is covered.
double illumination_loss(const sh::ShIllumination& illum, const IlluminationLossContext& ctx,
                         std::size_t* p_out = nullptr);
// Spec-level convenience: builds the context from an environment map.
double illumination_loss(const sh::ShIllumination& illum, const EnvironmentMap& coverage_env,
                         int dir_count = 4096, std::uint64_t seed = 0,
                         std::size_t* p_out = nullptr);

// (1/q) Sum |rho - 0.5| across channels, applied to both textures and summed.
double albedo_loss(const MaterialTextures& textures);

// Weighted total; throws naming the offending part on NaN.
LossReport total_loss(double im, double chr, double illum, double alb, const LossWeights& weights);

}  // namespace relight
