#include "relight/renderer.hpp"

#include <algorithm>

#include "relight/error.hpp"
#include "relight/parallel.hpp"

namespace relight {

RadianceImage render_view(const GBuffer& gbuffer, const MaterialTextures& textures,
                          const TransportField& field, const sh::ShVector& light,
                          const LightSampleSet& samples, const RenderOptions& options) {
    require(textures.resolution == field.resolution, "texture/field resolution mismatch");
    require(samples.pixels.size() == gbuffer.masked_pixels.size(),
            "render_view: sample set does not match the G-buffer (",
            samples.pixels.size(), " vs ", gbuffer.masked_pixels.size(), " pixels)");

    RadianceImage out;
    out.width = gbuffer.width;
    out.height = gbuffer.height;
    out.radiance = ImageRgb(gbuffer.width, gbuffer.height);
    out.mask = gbuffer.mask;
    out.masked_count = gbuffer.masked_pixels.size();

    const int m_d = samples.m_d;
    const int m_s = samples.m_s;
    const double dw_d = options.diffuse_weight > 0.0 ? options.diffuse_weight
                                                     : (m_d > 0 ? kTwoPi / m_d : 0.0);
    const double dw_s = options.specular_weight > 0.0 ? options.specular_weight
                                                      : (m_s > 0 ? kTwoPi / m_s : 0.0);
    const int nd = field.diffuse_coeffs();
    const int ns = field.specular_coeffs();
    const int nl = sh::coeff_count(light.order);

    parallel_ranges(samples.pixels.size(), 256, [&](std::size_t lo, std::size_t hi, std::size_t) {
        std::vector<double> basis(std::max({nd, ns, nl}));
        for (std::size_t p = lo; p < hi; ++p) {
            std::uint32_t pixel = samples.pixels[p];
            BilinearFootprint fp = bilinear_footprint(field.resolution, gbuffer.uv.data[pixel]);

            Rgb diffuse_sum;
            for (int j = 0; j < m_d; ++j) {
                const Vec3& wt = samples.diffuse_tangent[p * m_d + j];
                const Vec3& ww = samples.diffuse_world[p * m_d + j];
                sh::eval_basis(wt, field.diffuse_order, basis.data());
                Rgb transport = eval_diffuse_transport(field, fp, basis.data());
                Rgb radiance = sh::eval_radiance(light, ww);
                if (options.clamp_negative_light) radiance = max0(radiance);
                diffuse_sum += transport * radiance;
            }

            Rgb specular_sum;
            for (int j = 0; j < m_s; ++j) {
                const Vec3& ww = samples.specular_world[p * m_s + j];
                sh::eval_zonal_basis(samples.specular_cos[p * m_s + j], field.specular_order,
                                     basis.data());
                Rgb transport = eval_specular_transport(field, fp, basis.data());
                Rgb radiance = sh::eval_radiance(light, ww);
                if (options.clamp_negative_light) radiance = max0(radiance);
                specular_sum += transport * radiance;
            }

            Rgb rho_d = sample_bilinear(textures.rho_d, fp);
            Rgb rho_s = sample_bilinear(textures.rho_s, fp);
            out.radiance.data[pixel] = rho_d * (dw_d * diffuse_sum) + rho_s * (dw_s * specular_sum);
        }
    });
    return out;
}

RadianceImage render_closed_form(const GBuffer& gbuffer, const MaterialTextures& textures,
                                 const TransportField& field, const sh::ShVector& light) {
    require(textures.resolution == field.resolution, "texture/field resolution mismatch");
    require(!field.softplus, "render_closed_form needs a linear transport field");

    RadianceImage out;
    out.width = gbuffer.width;
    out.height = gbuffer.height;
    out.radiance = ImageRgb(gbuffer.width, gbuffer.height);
    out.mask = gbuffer.mask;
    out.masked_count = gbuffer.masked_pixels.size();

    const int nd = field.diffuse_coeffs();
    const int shared_d = std::min(nd, sh::coeff_count(light.order));
    const int ls_max = std::min(field.specular_order, light.order);

    parallel_ranges(gbuffer.masked_pixels.size(), 64, [&](std::size_t lo, std::size_t hi, std::size_t) {
        std::vector<double> local(nd), world(nd);
        std::vector<double> mirror_basis(sh::coeff_count(light.order));
        for (std::size_t p = lo; p < hi; ++p) {
            std::uint32_t pixel = gbuffer.masked_pixels[p];
            TbnFrame frame = gbuffer.frame_at(pixel);
            BilinearFootprint fp = bilinear_footprint(field.resolution, gbuffer.uv.data[pixel]);

            // Diffuse: rotate the tangent-frame transport into world and
            // take the SH dot product with the light.
            sh::ShRotation rot(frame.to_world(), field.diffuse_order);
            Rgb diffuse;
            for (int c = 0; c < 3; ++c) {
                for (int k = 0; k < nd; ++k) {
                    double v = 0.0;
                    for (int i = 0; i < 4; ++i)
                        v += fp.weight[i] * field.diffuse_at(fp.texel[i], c)[k];
                    local[k] = v;
                }
                rot.apply(local.data(), world.data());
                double acc = 0.0;
                for (int k = 0; k < shared_d; ++k) acc += world[k] * light.coeffs[k][c];
                diffuse[c] = acc;
            }

            // Specular: zonal kernel about the mirror direction, so the
            // sphere integral collapses through the addition theorem to
            //   Sum_l s_l sqrt(4 pi / (2l+1)) Sum_m c_lm Y_lm(r).
            Vec3 r = reflect_about(gbuffer.view_dir.data[pixel], frame.normal);
            sh::eval_basis(r, light.order, mirror_basis.data());
            Rgb specular;
            for (int c = 0; c < 3; ++c) {
                double s_coeff[sh::kMaxOrder + 1];
                for (int l = 0; l <= field.specular_order; ++l) {
                    double v = 0.0;
                    for (int i = 0; i < 4; ++i)
                        v += fp.weight[i] * field.specular_at(fp.texel[i], c)[l];
                    s_coeff[l] = v;
                }
                double acc = 0.0;
                for (int l = 0; l <= ls_max; ++l) {
                    double band = 0.0;
                    for (int m = -l; m <= l; ++m)
                        band += light.at(l, m)[c] * mirror_basis[sh::sh_index(l, m)];
                    acc += s_coeff[l] * std::sqrt(kFourPi / (2.0 * l + 1.0)) * band;
                }
                specular[c] = acc;
            }

            Rgb rho_d = sample_bilinear(textures.rho_d, fp);
            Rgb rho_s = sample_bilinear(textures.rho_s, fp);
            out.radiance.data[pixel] = rho_d * diffuse + rho_s * specular;
        }
    });
    return out;
}

RadianceImage relight_view(const GBuffer& gbuffer, const MaterialTextures& textures,
                      const TransportField& field, const sh::ShVector& new_light,
                      const LightSampleSet& samples, const RenderOptions& options) {
    require(new_light.order <= sh::kMaxOrder, "relight: light order exceeds ", sh::kMaxOrder);
    return render_view(gbuffer, textures, field, new_light, samples, options);
}

}  // namespace relight
