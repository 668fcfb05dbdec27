#pragma once

#include "relight/raster.hpp"
#include "relight/sampling.hpp"
#include "relight/sh.hpp"
#include "relight/transport.hpp"

namespace relight {

struct RadianceImage {
    int width = 0;
    int height = 0;
    ImageRgb radiance;
    MaskImage mask;
    std::size_t masked_count = 0;
};

struct RenderOptions {
    // Quadrature weight per sampled direction; <= 0 selects the default
    // 2 pi / m for each component.
    double diffuse_weight = -1.0;
    double specular_weight = -1.0;
    // Negative SH light reconstructions are clamped to zero before the
    // product (disable for linear-model validation).
    bool clamp_negative_light = true;
};

// Discretized image formation: per masked pixel
//   I = rho_d * Sum_j dw_d T_d(w'_j) L(w_j) + rho_s * Sum_j dw_s T_s(w_j . r) L(w_j)
RadianceImage render_view(const GBuffer& gbuffer, const MaterialTextures& textures,
                          const TransportField& field, const sh::ShVector& light,
                          const LightSampleSet& samples, const RenderOptions& options = {});

// Exact full-sphere SH dot-product render (no sampling, no clamping):
// diffuse transport rotated into world, specular via the zonal expansion
// about the mirror direction. A lower-order side of a light/transport
// order mismatch acts as zero-padded.
RadianceImage render_closed_form(const GBuffer& gbuffer, const MaterialTextures& textures,
                                 const TransportField& field, const sh::ShVector& light);

// render_view with substituted illumination coefficients.
RadianceImage relight_view(const GBuffer& gbuffer, const MaterialTextures& textures,
                      const TransportField& field, const sh::ShVector& new_light,
                      const LightSampleSet& samples, const RenderOptions& options = {});

}  // namespace relight
