#include "relight/optim.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "relight/error.hpp"
#include "relight/parallel.hpp"
#include "relight/rng.hpp"

namespace relight {

namespace {
inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }
}  // namespace

GradientSet GradientSet::zeros_like(const ParameterSet& params) {
    GradientSet g;
    g.rho_d.assign(params.textures.rho_d.size() * 3, 0.0);
    g.rho_s.assign(params.textures.rho_s.size() * 3, 0.0);
    g.t_d.assign(params.field.t_d.size(), 0.0);
    g.t_s.assign(params.field.t_s.size(), 0.0);
    g.c.assign(params.illum.current.coeffs.size() * 3, 0.0);
    return g;
}

void GradientSet::zero() {
    std::fill(rho_d.begin(), rho_d.end(), 0.0);
    std::fill(rho_s.begin(), rho_s.end(), 0.0);
    std::fill(t_d.begin(), t_d.end(), 0.0);
    std::fill(t_s.begin(), t_s.end(), 0.0);
    std::fill(c.begin(), c.end(), 0.0);
}

AdamState AdamState::zeros_like(const ParameterSet& params) {
    AdamState s;
    s.m = GradientSet::zeros_like(params);
    s.v = GradientSet::zeros_like(params);
    return s;
}

void adam_step(AdamState& state, ParameterSet& params, const GradientSet& grads,
               const AdamConfig& config) {
    ++state.step;
    double corr1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    double corr2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));

    struct Block {
        double* param;
        const double* grad;
        double* m;
        double* v;
        std::size_t n;
    };
    const Block blocks[5] = {
        {&params.textures.rho_d[0].r, grads.rho_d.data(), state.m.rho_d.data(),
         state.v.rho_d.data(), grads.rho_d.size()},
        {&params.textures.rho_s[0].r, grads.rho_s.data(), state.m.rho_s.data(),
         state.v.rho_s.data(), grads.rho_s.size()},
        {params.field.t_d.data(), grads.t_d.data(), state.m.t_d.data(), state.v.t_d.data(),
         grads.t_d.size()},
        {params.field.t_s.data(), grads.t_s.data(), state.m.t_s.data(), state.v.t_s.data(),
         grads.t_s.size()},
        {&params.illum.current.coeffs[0].r, grads.c.data(), state.m.c.data(), state.v.c.data(),
         grads.c.size()},
    };
    for (const Block& b : blocks) {
        require(b.n > 0, "adam_step: empty parameter block");
        parallel_ranges(b.n, 65536, [&](std::size_t lo, std::size_t hi, std::size_t) {
            for (std::size_t i = lo; i < hi; ++i) {
                double g = b.grad[i];
                b.m[i] = config.beta1 * b.m[i] + (1.0 - config.beta1) * g;
                b.v[i] = config.beta2 * b.v[i] + (1.0 - config.beta2) * g * g;
                double mhat = b.m[i] / corr1;
                double vhat = b.v[i] / corr2;
                b.param[i] -= config.lr * mhat / (std::sqrt(vhat) + config.epsilon);
                require(std::isfinite(b.param[i]), "adam_step: parameter became non-finite");
            }
        });
    }
}

ViewContext ViewContext::make(const GBuffer& gbuffer, const ViewImage& view,
                              const SamplingConfig& sampling) {
    require(gbuffer.width == view.pixels.width && gbuffer.height == view.pixels.height,
            "ViewContext: G-buffer does not match the view image");
    ViewContext ctx;
    ctx.gbuffer = &gbuffer;
    ctx.target = &view.pixels;
    ctx.samples = make_light_samples(gbuffer, sampling);
    ctx.in_loss.resize(gbuffer.masked_pixels.size());
    ctx.loss_pixel_count = 0;
    for (std::size_t p = 0; p < gbuffer.masked_pixels.size(); ++p) {
        bool in = view.mask.data[gbuffer.masked_pixels[p]] != 0;
        ctx.in_loss[p] = in ? 1 : 0;
        if (in) ++ctx.loss_pixel_count;
    }
    return ctx;
}

// ---------------------------------------------------------------------------
// Fused forward/backward

namespace {

// Chroma statistics of one sample set: valid flags, unit chromas, and the
// normalized mean. Returns the summed spread Sum_j (1 - u_j . mu).
struct ChromaScratch {
    std::vector<Rgb> unit;
    std::vector<std::uint8_t> valid;
    std::vector<double> inv_len;
    Rgb mean;
    bool mean_valid = false;

    double compute(const Rgb* samples, int m) {
        unit.resize(m);
        valid.resize(m);
        inv_len.resize(m);
        Rgb sum;
        int n_valid = 0;
        for (int j = 0; j < m; ++j) {
            double len = norm2(samples[j]);
            if (len < kChromaEps) {
                valid[j] = 0;
                continue;
            }
            valid[j] = 1;
            inv_len[j] = 1.0 / len;
            unit[j] = inv_len[j] * samples[j];
            sum += unit[j];
            ++n_valid;
        }
        mean_valid = false;
        if (n_valid == 0) return 0.0;
        double mlen = norm2(sum);
        if (mlen < kChromaEps) return 0.0;
        mean = (1.0 / mlen) * sum;
        mean_valid = true;
        double term = 0.0;
        for (int j = 0; j < m; ++j) {
            if (!valid[j]) continue;
            term += 1.0 - (unit[j].r * mean.r + unit[j].g * mean.g + unit[j].b * mean.b);
        }
        return term;
    }

    // d(spread)/dT_j = -(mu - (u_j . mu) u_j) / ||T_j||
    Rgb grad(int j) const {
        if (!mean_valid || !valid[j]) return Rgb{};
        double proj = unit[j].r * mean.r + unit[j].g * mean.g + unit[j].b * mean.b;
        return (-inv_len[j]) * (mean - proj * unit[j]);
    }
};

}  // namespace

void forward_backward(const ParameterSet& params, const ViewContext& view,
                      const IlluminationLossContext& illum_ctx, const LossWeights& weights,
                      const RenderOptions& options, GradientSet* grads, LossReport* report,
                      ImageRgb* rendered) {
    const GBuffer& gb = *view.gbuffer;
    const LightSampleSet& samples = view.samples;
    const TransportField& field = params.field;
    const MaterialTextures& textures = params.textures;
    const sh::ShVector& light = params.illum.current;

    require(textures.resolution == field.resolution, "texture/field resolution mismatch");
    require(samples.pixels.size() == gb.masked_pixels.size(),
            "forward_backward: sample set does not match the G-buffer");
    require(view.loss_pixel_count > 0, "forward_backward: no object pixels in the loss mask");

    const std::size_t np = samples.pixels.size();
    const int m_d = samples.m_d;
    const int m_s = samples.m_s;
    const int nd = field.diffuse_coeffs();
    const int ns = field.specular_coeffs();
    const int nl = sh::coeff_count(light.order);
    const double dw_d = options.diffuse_weight > 0.0 ? options.diffuse_weight
                                                     : (m_d > 0 ? kTwoPi / m_d : 0.0);
    const double dw_s = options.specular_weight > 0.0 ? options.specular_weight
                                                      : (m_s > 0 ? kTwoPi / m_s : 0.0);
    const double inv_n = 1.0 / static_cast<double>(view.loss_pixel_count);
    const bool clamp_light = options.clamp_negative_light;

    if (rendered && (rendered->width != gb.width || rendered->height != gb.height)) {
        *rendered = ImageRgb(gb.width, gb.height);
    }

    constexpr std::size_t kBlock = 256;
    const std::size_t n_blocks = block_count_for(np, kBlock);

    // Per-pixel gradient records, scattered serially afterwards.
    std::vector<BilinearFootprint> fps(np);
    std::vector<double> grho;   // np * 6 : d rho_d (3), d rho_s (3)
    std::vector<double> gtd;    // np * 3 * nd
    std::vector<double> gts;    // np * 3 * ns
    std::vector<std::vector<double>> gc_blocks;  // per block, 3 * nl
    if (grads) {
        grho.assign(np * 6, 0.0);
        gtd.assign(np * 3 * nd, 0.0);
        gts.assign(np * 3 * ns, 0.0);
        gc_blocks.assign(n_blocks, std::vector<double>(3 * nl, 0.0));
    }
    std::vector<double> block_im(n_blocks, 0.0);
    std::vector<double> block_chr_d(n_blocks, 0.0);
    std::vector<double> block_chr_s(n_blocks, 0.0);
    std::vector<Rgb> pixel_radiance(np);

    parallel_ranges(np, kBlock, [&](std::size_t lo, std::size_t hi, std::size_t block) {
        std::vector<double> basis_d(static_cast<std::size_t>(std::max(1, m_d)) * nd);
        std::vector<double> zonal_s(static_cast<std::size_t>(std::max(1, m_s)) * ns);
        std::vector<double> basis_l(static_cast<std::size_t>(m_d + m_s) * nl);
        std::vector<Rgb> transport_d(m_d), transport_s(m_s);
        std::vector<Rgb> raw_d(m_d), raw_s(m_s);
        std::vector<Rgb> light_d(m_d), light_s(m_s);
        std::vector<double> interp_td(3 * nd), interp_ts(3 * ns);
        ChromaScratch chroma_d, chroma_s;
        double* gc = grads ? gc_blocks[block].data() : nullptr;

        for (std::size_t p = lo; p < hi; ++p) {
            const std::uint32_t pixel = samples.pixels[p];
            const BilinearFootprint fp = bilinear_footprint(field.resolution, gb.uv.data[pixel]);
            fps[p] = fp;

            // Interpolate transport coefficients once per pixel.
            for (int c = 0; c < 3; ++c) {
                double* td = interp_td.data() + c * nd;
                std::fill(td, td + nd, 0.0);
                double* ts = interp_ts.data() + c * ns;
                std::fill(ts, ts + ns, 0.0);
                for (int i = 0; i < 4; ++i) {
                    const double w = fp.weight[i];
                    const double* src_d = field.diffuse_at(fp.texel[i], c);
                    for (int k = 0; k < nd; ++k) td[k] += w * src_d[k];
                    const double* src_s = field.specular_at(fp.texel[i], c);
                    for (int l = 0; l < ns; ++l) ts[l] += w * src_s[l];
                }
            }
            const Rgb rho_d = sample_bilinear(textures.rho_d, fp);
            const Rgb rho_s = sample_bilinear(textures.rho_s, fp);

            // Forward: diffuse component.
            Rgb sum_d;
            for (int j = 0; j < m_d; ++j) {
                double* bd = basis_d.data() + static_cast<std::size_t>(j) * nd;
                sh::eval_basis(samples.diffuse_tangent[p * m_d + j], field.diffuse_order, bd);
                double* bl = basis_l.data() + static_cast<std::size_t>(j) * nl;
                sh::eval_basis(samples.diffuse_world[p * m_d + j], light.order, bl);
                Rgb radiance;
                for (int k = 0; k < nl; ++k) radiance += bl[k] * light.coeffs[k];
                light_d[j] = radiance;
                Rgb transport;
                for (int c = 0; c < 3; ++c) {
                    const double* td = interp_td.data() + c * nd;
                    double acc = 0.0;
                    for (int k = 0; k < nd; ++k) acc += td[k] * bd[k];
                    raw_d[j][c] = acc;
                    transport[c] = field.softplus ? softplus_fn(acc) : acc;
                }
                transport_d[j] = transport;
                Rgb lc = clamp_light ? max0(radiance) : radiance;
                sum_d += transport * lc;
            }

            // Forward: specular component.
            Rgb sum_s;
            for (int j = 0; j < m_s; ++j) {
                double* zs = zonal_s.data() + static_cast<std::size_t>(j) * ns;
                sh::eval_zonal_basis(samples.specular_cos[p * m_s + j], field.specular_order, zs);
                double* bl = basis_l.data() + static_cast<std::size_t>(m_d + j) * nl;
                sh::eval_basis(samples.specular_world[p * m_s + j], light.order, bl);
                Rgb radiance;
                for (int k = 0; k < nl; ++k) radiance += bl[k] * light.coeffs[k];
                light_s[j] = radiance;
                Rgb transport;
                for (int c = 0; c < 3; ++c) {
                    const double* ts = interp_ts.data() + c * ns;
                    double acc = 0.0;
                    for (int l = 0; l < ns; ++l) acc += ts[l] * zs[l];
                    raw_s[j][c] = acc;
                    transport[c] = field.softplus ? softplus_fn(acc) : acc;
                }
                transport_s[j] = transport;
                Rgb lc = clamp_light ? max0(radiance) : radiance;
                sum_s += transport * lc;
            }

            const Rgb radiance_out = rho_d * (dw_d * sum_d) + rho_s * (dw_s * sum_s);
            pixel_radiance[p] = radiance_out;

            if (!view.in_loss[p]) continue;

            const Rgb target = view.target->data[pixel];
            const Rgb diff = radiance_out - target;
            block_im[block] += sum_abs(diff);

            const double w_chr = std::min(20.0 * norm2(target), 1.0);
            double spread_d = m_d > 0 ? chroma_d.compute(transport_d.data(), m_d) : 0.0;
            double spread_s = m_s > 0 ? chroma_s.compute(transport_s.data(), m_s) : 0.0;
            block_chr_d[block] += w_chr * spread_d;
            block_chr_s[block] += w_chr * spread_s;

            if (!grads) continue;

            // d L_im / d I, with the 1/n mean folded in.
            const Rgb g_img{inv_n * sign_of(diff.r), inv_n * sign_of(diff.g),
                            inv_n * sign_of(diff.b)};

            double* rec_rho = grho.data() + p * 6;
            for (int c = 0; c < 3; ++c) {
                rec_rho[c] = g_img[c] * dw_d * sum_d[c];
                rec_rho[3 + c] = g_img[c] * dw_s * sum_s[c];
            }

            const double chr_scale_d =
                m_d > 0 ? weights.lambda_chr * w_chr * inv_n / static_cast<double>(m_d) : 0.0;
            const double chr_scale_s =
                m_s > 0 ? weights.lambda_chr * w_chr * inv_n / static_cast<double>(m_s) : 0.0;

            double* rec_td = gtd.data() + p * 3 * nd;
            for (int j = 0; j < m_d; ++j) {
                const double* bd = basis_d.data() + static_cast<std::size_t>(j) * nd;
                const double* bl = basis_l.data() + static_cast<std::size_t>(j) * nl;
                const Rgb lc = clamp_light ? max0(light_d[j]) : light_d[j];
                const Rgb g_chroma = chroma_d.grad(j);
                for (int c = 0; c < 3; ++c) {
                    // Through the render product and the chroma spread.
                    double g_t = g_img[c] * rho_d[c] * dw_d * lc[c] + chr_scale_d * g_chroma[c];
                    if (field.softplus) g_t *= softplus_grad(raw_d[j][c]);
                    if (g_t != 0.0) {
                        double* dst = rec_td + c * nd;
                        for (int k = 0; k < nd; ++k) dst[k] += g_t * bd[k];
                    }
                    // Light gradient through the (clamped) reconstruction.
                    bool open = !clamp_light || light_d[j][c] > 0.0;
                    if (open) {
                        double g_l = g_img[c] * rho_d[c] * dw_d * transport_d[j][c];
                        if (g_l != 0.0) {
                            double* dst = gc + c;
                            for (int k = 0; k < nl; ++k) dst[k * 3] += g_l * bl[k];
                        }
                    }
                }
            }

            double* rec_ts = gts.data() + p * 3 * ns;
            for (int j = 0; j < m_s; ++j) {
                const double* zs = zonal_s.data() + static_cast<std::size_t>(j) * ns;
                const double* bl = basis_l.data() + static_cast<std::size_t>(m_d + j) * nl;
                const Rgb lc = clamp_light ? max0(light_s[j]) : light_s[j];
                const Rgb g_chroma = chroma_s.grad(j);
                for (int c = 0; c < 3; ++c) {
                    double g_t = g_img[c] * rho_s[c] * dw_s * lc[c] + chr_scale_s * g_chroma[c];
                    if (field.softplus) g_t *= softplus_grad(raw_s[j][c]);
                    if (g_t != 0.0) {
                        double* dst = rec_ts + c * ns;
                        for (int l = 0; l < ns; ++l) dst[l] += g_t * zs[l];
                    }
                    bool open = !clamp_light || light_s[j][c] > 0.0;
                    if (open) {
                        double g_l = g_img[c] * rho_s[c] * dw_s * transport_s[j][c];
                        if (g_l != 0.0) {
                            double* dst = gc + c;
                            for (int k = 0; k < nl; ++k) dst[k * 3] += g_l * bl[k];
                        }
                    }
                }
            }
        }
    });

    // Block-ordered reductions keep every run bit-identical.
    double loss_im = 0.0, chr_d_sum = 0.0, chr_s_sum = 0.0;
    for (std::size_t b = 0; b < n_blocks; ++b) {
        loss_im += block_im[b];
        chr_d_sum += block_chr_d[b];
        chr_s_sum += block_chr_s[b];
    }
    loss_im *= inv_n;
    double loss_chr = 0.0;
    if (m_d > 0) loss_chr += chr_d_sum * inv_n / static_cast<double>(m_d);
    if (m_s > 0) loss_chr += chr_s_sum * inv_n / static_cast<double>(m_s);

    if (rendered) {
        for (std::size_t p = 0; p < np; ++p) rendered->data[samples.pixels[p]] = pixel_radiance[p];
    }

    if (grads) {
        for (std::size_t b = 0; b < n_blocks; ++b) {
            const std::vector<double>& gc = gc_blocks[b];
            for (std::size_t i = 0; i < gc.size(); ++i) grads->c[i] += gc[i];
        }
        // Serial scatter through the bilinear footprints, pixel order.
        for (std::size_t p = 0; p < np; ++p) {
            if (!view.in_loss[p]) continue;
            const BilinearFootprint& fp = fps[p];
            const double* rec_rho = grho.data() + p * 6;
            const double* rec_td = gtd.data() + p * 3 * nd;
            const double* rec_ts = gts.data() + p * 3 * ns;
            for (int i = 0; i < 4; ++i) {
                const double w = fp.weight[i];
                const std::size_t texel = fp.texel[i];
                for (int c = 0; c < 3; ++c) {
                    grads->rho_d[texel * 3 + c] += w * rec_rho[c];
                    grads->rho_s[texel * 3 + c] += w * rec_rho[3 + c];
                    double* dst_d = grads->t_d.data() + (texel * 3 + c) * nd;
                    const double* src_d = rec_td + c * nd;
                    for (int k = 0; k < nd; ++k) dst_d[k] += w * src_d[k];
                    double* dst_s = grads->t_s.data() + (texel * 3 + c) * ns;
                    const double* src_s = rec_ts + c * ns;
                    for (int l = 0; l < ns; ++l) dst_s[l] += w * src_s[l];
                }
            }
        }
    }

    // Illumination loss on the frozen direction set.
    double loss_illum = 0.0;
    std::size_t p_count = illum_ctx.dirs.size();
    if (p_count > 0) {
        require(illum_ctx.order == light.order, "illumination context order mismatch");
        const double inv_p = 1.0 / static_cast<double>(p_count);
        for (std::size_t d = 0; d < p_count; ++d) {
            const double* row = illum_ctx.basis.data() + d * nl;
            Rgb diff;
            for (int k = 0; k < nl; ++k) {
                diff += row[k] * (params.illum.current.coeffs[k] - params.illum.initial.coeffs[k]);
            }
            loss_illum += sum_abs(diff);
            if (grads && weights.lambda_illum != 0.0) {
                Rgb s{weights.lambda_illum * inv_p * sign_of(diff.r),
                      weights.lambda_illum * inv_p * sign_of(diff.g),
                      weights.lambda_illum * inv_p * sign_of(diff.b)};
                for (int k = 0; k < nl; ++k) {
                    grads->c[k * 3 + 0] += s.r * row[k];
                    grads->c[k * 3 + 1] += s.g * row[k];
                    grads->c[k * 3 + 2] += s.b * row[k];
                }
            }
        }
        loss_illum *= inv_p;
    }

    // Albedo regularizer, every texel of both textures.
    const std::size_t q = textures.texel_count();
    double alb_sum = 0.0;
    const double inv_q = 1.0 / static_cast<double>(q);
    for (std::size_t t = 0; t < q; ++t) {
        alb_sum += sum_abs(textures.rho_d[t] - Rgb{0.5, 0.5, 0.5});
        alb_sum += sum_abs(textures.rho_s[t] - Rgb{0.5, 0.5, 0.5});
    }
    double loss_alb = alb_sum * inv_q;
    if (grads && weights.lambda_alb != 0.0) {
        const double s = weights.lambda_alb * inv_q;
        for (std::size_t t = 0; t < q; ++t) {
            for (int c = 0; c < 3; ++c) {
                grads->rho_d[t * 3 + c] += s * sign_of(textures.rho_d[t][c] - 0.5);
                grads->rho_s[t * 3 + c] += s * sign_of(textures.rho_s[t][c] - 0.5);
            }
        }
    }

    LossReport rep = total_loss(loss_im, loss_chr, loss_illum, loss_alb, weights);
    rep.p = p_count;
    rep.q = q;
    if (report) *report = rep;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kCkptMagic[4] = {'R', 'L', 'C', 'K'};
constexpr std::uint32_t kCkptVersion = 1;

template <typename T>
void wr(std::ofstream& f, const T& v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
void rd(std::ifstream& f, T& v) {
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
}
void wr_doubles(std::ofstream& f, const double* data, std::size_t n) {
    f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
}
void rd_doubles(std::ifstream& f, double* data, std::size_t n) {
    f.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
}
void wr_grad(std::ofstream& f, const GradientSet& g) {
    wr_doubles(f, g.rho_d.data(), g.rho_d.size());
    wr_doubles(f, g.rho_s.data(), g.rho_s.size());
    wr_doubles(f, g.t_d.data(), g.t_d.size());
    wr_doubles(f, g.t_s.data(), g.t_s.size());
    wr_doubles(f, g.c.data(), g.c.size());
}
void rd_grad(std::ifstream& f, GradientSet& g) {
    rd_doubles(f, g.rho_d.data(), g.rho_d.size());
    rd_doubles(f, g.rho_s.data(), g.rho_s.size());
    rd_doubles(f, g.t_d.data(), g.t_d.size());
    rd_doubles(f, g.t_s.data(), g.t_s.size());
    rd_doubles(f, g.c.data(), g.c.size());
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params,
                     const AdamState* adam) {
    std::ofstream f(path, std::ios::binary);
    require(f.good(), "cannot open checkpoint for writing: ", path.string());
    f.write(kCkptMagic, 4);
    wr(f, kCkptVersion);
    wr(f, params.field.resolution);
    wr(f, params.field.diffuse_order);
    wr(f, params.field.specular_order);
    std::uint8_t softplus = params.field.softplus ? 1 : 0;
    wr(f, softplus);
    wr(f, params.illum.current.order);
    wr_doubles(f, &params.textures.rho_d[0].r, params.textures.rho_d.size() * 3);
    wr_doubles(f, &params.textures.rho_s[0].r, params.textures.rho_s.size() * 3);
    wr_doubles(f, params.field.t_d.data(), params.field.t_d.size());
    wr_doubles(f, params.field.t_s.data(), params.field.t_s.size());
    wr_doubles(f, &params.illum.current.coeffs[0].r, params.illum.current.coeffs.size() * 3);
    wr_doubles(f, &params.illum.initial.coeffs[0].r, params.illum.initial.coeffs.size() * 3);
    std::uint8_t has_adam = adam ? 1 : 0;
    wr(f, has_adam);
    if (adam) {
        wr(f, adam->step);
        wr_grad(f, adam->m);
        wr_grad(f, adam->v);
    }
    require(f.good(), "checkpoint write failed: ", path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), "cannot open checkpoint: ", path.string());
    char magic[4];
    f.read(magic, 4);
    require(std::memcmp(magic, kCkptMagic, 4) == 0, path.string(), ": not a checkpoint file");
    std::uint32_t version = 0;
    rd(f, version);
    require(version == kCkptVersion, path.string(), ": unsupported checkpoint version ", version);

    int resolution = 0, l_d = 0, l_s = 0, illum_order = 0;
    std::uint8_t softplus = 0;
    rd(f, resolution);
    rd(f, l_d);
    rd(f, l_s);
    rd(f, softplus);
    rd(f, illum_order);
    require(resolution > 0 && resolution <= 8192, path.string(), ": bad resolution");
    require(l_d >= 0 && l_d <= sh::kMaxOrder && l_s >= 0 && l_s <= sh::kMaxOrder,
            path.string(), ": bad transport orders");
    require(illum_order >= 0 && illum_order <= sh::kMaxOrder, path.string(), ": bad SH order");

    Checkpoint ckpt;
    ckpt.params.textures = MaterialTextures(resolution);
    ckpt.params.field = TransportField(resolution, l_d, l_s);
    ckpt.params.field.softplus = softplus != 0;
    ckpt.params.illum.current = sh::ShVector(illum_order);
    ckpt.params.illum.initial = sh::ShVector(illum_order);
    rd_doubles(f, &ckpt.params.textures.rho_d[0].r, ckpt.params.textures.rho_d.size() * 3);
    rd_doubles(f, &ckpt.params.textures.rho_s[0].r, ckpt.params.textures.rho_s.size() * 3);
    rd_doubles(f, ckpt.params.field.t_d.data(), ckpt.params.field.t_d.size());
    rd_doubles(f, ckpt.params.field.t_s.data(), ckpt.params.field.t_s.size());
    rd_doubles(f, &ckpt.params.illum.current.coeffs[0].r,
               ckpt.params.illum.current.coeffs.size() * 3);
    rd_doubles(f, &ckpt.params.illum.initial.coeffs[0].r,
               ckpt.params.illum.initial.coeffs.size() * 3);
    std::uint8_t has_adam = 0;
    rd(f, has_adam);
    if (has_adam) {
        AdamState adam = AdamState::zeros_like(ckpt.params);
        rd(f, adam.step);
        rd_grad(f, adam.m);
        rd_grad(f, adam.v);
        ckpt.adam = std::move(adam);
    }
    require(!f.fail(), path.string(), ": truncated checkpoint");
    return ckpt;
}

// ---------------------------------------------------------------------------
// Training loop

FitResult fit(const SceneDataset& dataset, const sh::ShIllumination& illum_init,
              const EnvironmentMap& coverage_env, const FitConfig& config) {
    require(!dataset.train_ids.empty(), "fit: dataset has no training views");
    require(config.iterations > 0, "fit: iterations must be positive");
    config.sampling.validate();

    FitResult result;
    InitialParameters init =
        init_parameters(config.texture_resolution, config.diffuse_order, config.specular_order);
    result.params.textures = std::move(init.textures);
    result.params.field = std::move(init.field);
    result.params.field.softplus = config.softplus;
    result.params.illum = illum_init;
    result.adam = AdamState::zeros_like(result.params);

    TangentBasis tangents = compute_tangent_frames(dataset.mesh);
    std::vector<GBuffer> gbuffers;
    gbuffers.reserve(dataset.train_ids.size());
    for (int vid : dataset.train_ids) {
        const ViewImage& view = dataset.views[vid];
        gbuffers.push_back(rasterize_cached(dataset.mesh, dataset.camera_of(view), tangents,
                                            config.gbuffer_cache));
    }

    IlluminationLossContext illum_ctx = IlluminationLossContext::make(
        coverage_env.coverage, coverage_env.width, coverage_env.height,
        result.params.illum.current.order, config.illum_dir_count, config.seed);
    if (illum_ctx.dirs.empty()) {
        std::fprintf(stderr,
                     "warning: no illumination-loss directions fall inside coverage; "
                     "the illumination loss is 0 for this run\n");
    }

    std::ofstream csv;
    if (!config.out_dir.empty()) {
        std::filesystem::create_directories(config.out_dir);
        csv.open(config.out_dir / "loss.csv");
        require(csv.good(), "cannot open loss CSV under ", config.out_dir.string());
        csv << "iteration,im,chr,illum,alb,total\n";
    }

    RenderOptions options;
    options.clamp_negative_light = config.clamp_negative_light;

    std::mt19937_64 order_rng(splitmix64(config.seed ^ 0x46495453484ULL));
    std::vector<std::size_t> order(dataset.train_ids.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto reshuffle = [&]() {
        for (std::size_t i = order.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_double(order_rng) * (i + 1));
            if (j > i) j = i;
            std::swap(order[i], order[j]);
        }
    };

    GradientSet grads = GradientSet::zeros_like(result.params);
    auto checkpoint_name = [&](int iter) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "checkpoint_%06d.bin", iter);
        return config.out_dir / buf;
    };

    for (int iter = 1; iter <= config.iterations; ++iter) {
        std::size_t slot = static_cast<std::size_t>(iter - 1) % order.size();
        if (slot == 0) reshuffle();
        std::size_t train_slot = order[slot];
        const ViewImage& view = dataset.views[dataset.train_ids[train_slot]];
        ViewContext ctx = ViewContext::make(gbuffers[train_slot], view, config.sampling);

        grads.zero();
        LossReport report;
        forward_backward(result.params, ctx, illum_ctx, config.weights, options, &grads, &report);
        adam_step(result.adam, result.params, grads, config.adam);
        result.history.push_back(report);
        result.iterations_run = iter;

        if (csv.is_open()) {
            csv << iter << ',' << report.im << ',' << report.chr << ',' << report.illum << ','
                << report.alb << ',' << report.total << '\n';
        }
        if (!config.out_dir.empty() && config.checkpoint_interval > 0 &&
            iter % config.checkpoint_interval == 0) {
            save_checkpoint(checkpoint_name(iter), result.params, &result.adam);
        }
        if (config.target_total_loss > 0.0 && report.total < config.target_total_loss) break;
    }

    if (!config.out_dir.empty()) {
        save_checkpoint(config.out_dir / "checkpoint_final.bin", result.params, &result.adam);
        require(csv.good(), "loss CSV write failed");
    }
    return result;
}

// ---------------------------------------------------------------------------
// Finite differences

FdReport finite_diff_check(ParameterSet& params, const ViewContext& view,
                           const IlluminationLossContext& illum_ctx, const LossWeights& weights,
                           const RenderOptions& options, double epsilon, int samples_per_block,
                           std::uint64_t seed) {
    GradientSet grads = GradientSet::zeros_like(params);
    LossReport base;
    forward_backward(params, view, illum_ctx, weights, options, &grads, &base);

    struct Block {
        const char* name;
        double* param;
        const double* grad;
        std::size_t n;
    };
    const Block blocks[5] = {
        {"rho_d", &params.textures.rho_d[0].r, grads.rho_d.data(), grads.rho_d.size()},
        {"rho_s", &params.textures.rho_s[0].r, grads.rho_s.data(), grads.rho_s.size()},
        {"t_d", params.field.t_d.data(), grads.t_d.data(), grads.t_d.size()},
        {"t_s", params.field.t_s.data(), grads.t_s.data(), grads.t_s.size()},
        {"c", &params.illum.current.coeffs[0].r, grads.c.data(), grads.c.size()},
    };

    std::mt19937_64 rng(splitmix64(seed ^ 0xFD5EEDULL));
    FdReport report;
    auto loss_at = [&]() {
        LossReport r;
        forward_backward(params, view, illum_ctx, weights, options, nullptr, &r);
        return r.total;
    };

    for (const Block& block : blocks) {
        std::size_t count = std::min<std::size_t>(block.n, static_cast<std::size_t>(samples_per_block));
        for (std::size_t s = 0; s < count; ++s) {
            std::size_t idx = static_cast<std::size_t>(uniform_double(rng) * block.n);
            if (idx >= block.n) idx = block.n - 1;
            double saved = block.param[idx];
            block.param[idx] = saved + epsilon;
            double plus = loss_at();
            block.param[idx] = saved - epsilon;
            double minus = loss_at();
            block.param[idx] = saved;

            double numeric = (plus - minus) / (2.0 * epsilon);
            double analytic = block.grad[idx];
            double denom = std::max(std::abs(analytic), std::abs(numeric));
            double rel = denom < 1e-12 ? 0.0 : std::abs(analytic - numeric) / denom;
            ++report.tested;
            report.mean_rel_error += rel;
            if (rel > report.max_rel_error) report.max_rel_error = rel;
            if (report.worst.size() < 8 || rel > report.worst.back().rel_error) {
                report.worst.push_back(FdWorst{block.name, idx, analytic, numeric, rel});
                std::sort(report.worst.begin(), report.worst.end(),
                          [](const FdWorst& a, const FdWorst& b) { return a.rel_error > b.rel_error; });
                if (report.worst.size() > 8) report.worst.resize(8);
            }
        }
    }
    if (report.tested > 0) report.mean_rel_error /= static_cast<double>(report.tested);
    return report;
}

}  // namespace relight
