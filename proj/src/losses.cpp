#include "relight/losses.hpp"

#include <cmath>

#include "relight/error.hpp"
#include "relight/rng.hpp"

namespace relight {

double image_loss(const ImageRgb& rendered, const ImageRgb& target, const MaskImage& mask) {
    require(rendered.width == target.width && rendered.height == target.height,
            "image_loss: image dimensions differ");
    require(rendered.width == mask.width && rendered.height == mask.height,
            "image_loss: mask dimensions differ");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask.data[i]) continue;
        sum += sum_abs(rendered.data[i] - target.data[i]);
        ++n;
    }
    require(n > 0, "image_loss: empty mask");
    return sum / static_cast<double>(n);
}

namespace {

// Per-pixel chroma spread of one sample set; weight applied by caller.
double pixel_chroma_term(const Rgb* samples, int m) {
    Rgb mean_dir;
    int valid = 0;
    for (int j = 0; j < m; ++j) {
        double len = norm2(samples[j]);
        if (len < kChromaEps) continue;
        mean_dir += (1.0 / len) * samples[j];
        ++valid;
    }
    if (valid == 0) return 0.0;
    double mean_len = norm2(mean_dir);
    if (mean_len < kChromaEps) return 0.0;
    Rgb mean_chroma = (1.0 / mean_len) * mean_dir;
    double term = 0.0;
    for (int j = 0; j < m; ++j) {
        double len = norm2(samples[j]);
        if (len < kChromaEps) continue;
        Rgb chroma = (1.0 / len) * samples[j];
        term += 1.0 - (chroma.r * mean_chroma.r + chroma.g * mean_chroma.g +
                       chroma.b * mean_chroma.b);
    }
    return term;
}

}  // namespace

double chromaticity_loss(const TransportSamples& transports, const ImageRgb& target,
                         const MaskImage& mask) {
    require(transports.m_d >= 2 || transports.m_s >= 2,
            "chromaticity_loss: need at least 2 samples per pixel");
    require(target.width == mask.width && target.height == mask.height,
            "chromaticity_loss: target/mask dimensions differ");
    std::size_t n = transports.pixels.size();
    require(n > 0, "chromaticity_loss: no masked pixels");

    double sum_d = 0.0, sum_s = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        std::uint32_t pixel = transports.pixels[p];
        double w = std::min(20.0 * norm2(target.data[pixel]), 1.0);
        if (transports.m_d > 0)
            sum_d += w * pixel_chroma_term(&transports.diffuse[p * transports.m_d], transports.m_d);
        if (transports.m_s > 0)
            sum_s += w * pixel_chroma_term(&transports.specular[p * transports.m_s], transports.m_s);
    }
    double loss = 0.0;
    if (transports.m_d > 0) loss += sum_d / (static_cast<double>(n) * transports.m_d);
    if (transports.m_s > 0) loss += sum_s / (static_cast<double>(n) * transports.m_s);
    return loss;
}

IlluminationLossContext IlluminationLossContext::make(const MaskImage& coverage, int env_width,
                                                      int env_height, int order, int dir_count,
                                                      std::uint64_t seed) {
    require(dir_count > 0, "illumination loss: dir_count must be positive");
    IlluminationLossContext ctx;
    ctx.order = order;
    ctx.total_sampled = static_cast<std::size_t>(dir_count);
    std::mt19937_64 rng(splitmix64(seed ^ 0x494c4c554dULL));
    int n = sh::coeff_count(order);
    for (int i = 0; i < dir_count; ++i) {
        Vec3 dir = uniform_sphere_dir(rng);
        int ix, iy;
        equirect_texel_of(dir, env_width, env_height, ix, iy);
        if (!coverage.at(ix, iy)) continue;
        ctx.dirs.push_back(dir);
        std::size_t base = ctx.basis.size();
        ctx.basis.resize(base + n);
        sh::eval_basis(dir, order, ctx.basis.data() + base);
    }
    return ctx;
}

double illumination_loss(const sh::ShIllumination& illum, const IlluminationLossContext& ctx,
                         std::size_t* p_out) {
    require(illum.current.order == ctx.order && illum.initial.order == ctx.order,
            "illumination_loss: SH order mismatch");
    if (p_out) *p_out = ctx.dirs.size();
    if (ctx.dirs.empty()) return 0.0;  // warned at context creation by callers

    int n = sh::coeff_count(ctx.order);
    double sum = 0.0;
    for (std::size_t d = 0; d < ctx.dirs.size(); ++d) {
        const double* row = ctx.basis.data() + d * n;
        Rgb diff;
        for (int k = 0; k < n; ++k) {
            diff += row[k] * (illum.current.coeffs[k] - illum.initial.coeffs[k]);
        }
        sum += sum_abs(diff);
    }
    return sum / static_cast<double>(ctx.dirs.size());
}

double illumination_loss(const sh::ShIllumination& illum, const EnvironmentMap& coverage_env,
                         int dir_count, std::uint64_t seed, std::size_t* p_out) {
    auto ctx = IlluminationLossContext::make(coverage_env.coverage, coverage_env.width,
                                             coverage_env.height, illum.current.order, dir_count,
                                             seed);
    return illumination_loss(illum, ctx, p_out);
}

double albedo_loss(const MaterialTextures& textures) {
    std::size_t q = textures.texel_count();
    require(q > 0, "albedo_loss: empty textures");
    double sum = 0.0;
    for (const Rgb& c : textures.rho_d) sum += sum_abs(c - Rgb{0.5, 0.5, 0.5});
    double loss = sum / static_cast<double>(q);
    sum = 0.0;
    for (const Rgb& c : textures.rho_s) sum += sum_abs(c - Rgb{0.5, 0.5, 0.5});
    return loss + sum / static_cast<double>(q);
}

LossReport total_loss(double im, double chr, double illum, double alb,
                      const LossWeights& weights) {
    require(!std::isnan(im), "total_loss: image loss is NaN");
    require(!std::isnan(chr), "total_loss: chromaticity loss is NaN");
    require(!std::isnan(illum), "total_loss: illumination loss is NaN");
    require(!std::isnan(alb), "total_loss: albedo loss is NaN");
    LossReport report;
    report.im = im;
    report.chr = chr;
    report.illum = illum;
    report.alb = alb;
    report.total = im + weights.lambda_chr * chr + weights.lambda_illum * illum +
                   weights.lambda_alb * alb;
    return report;
}

}  // namespace relight
