#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "relight/envmap.hpp"
#include "relight/losses.hpp"
#include "relight/renderer.hpp"
#include "relight/sampling.hpp"
#include "relight/scene.hpp"
#include "relight/sh.hpp"
#include "relight/transport.hpp"

namespace relight {

// The complete optimizable state. illum.initial is never mutated.
struct ParameterSet {
    MaterialTextures textures;
    TransportField field;
    sh::ShIllumination illum;
};

// Gradient (or moment) storage mirroring ParameterSet's scalar layout.
struct GradientSet {
    std::vector<double> rho_d;  // q * 3
    std::vector<double> rho_s;  // q * 3
    std::vector<double> t_d;    // q * 3 * (L_d+1)^2
    std::vector<double> t_s;    // q * 3 * (L_s+1)
    std::vector<double> c;      // coeff_count(order) * 3

    static GradientSet zeros_like(const ParameterSet& params);
    void zero();
    std::size_t total_size() const {
        return rho_d.size() + rho_s.size() + t_d.size() + t_s.size() + c.size();
    }
};

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    std::uint64_t step = 0;
    GradientSet m;
    GradientSet v;

    static AdamState zeros_like(const ParameterSet& params);
};

// Bias-corrected Adam update over every parameter block.
void adam_step(AdamState& state, ParameterSet& params, const GradientSet& grads,
               const AdamConfig& config);

// One view's immutable training context. `in_loss` flags, per masked
// G-buffer pixel, whether the dataset object mask also covers it (the
// loss runs on the intersection; rendered values elsewhere are output
// only).
struct ViewContext {
    const GBuffer* gbuffer = nullptr;
    const ImageRgb* target = nullptr;
    LightSampleSet samples;
    std::vector<std::uint8_t> in_loss;
    std::size_t loss_pixel_count = 0;

    static ViewContext make(const GBuffer& gbuffer, const ViewImage& view,
                            const SamplingConfig& sampling);
};

// Fused forward + reverse pass for one view: renders, evaluates Eq-9-style
// losses on the object pixels, and accumulates exact analytic gradients
// into `grads` (pass nullptr for a loss-only forward). Deterministic for
// any thread count (fixed block partition, block-ordered reduction).
void forward_backward(const ParameterSet& params, const ViewContext& view,
                      const IlluminationLossContext& illum_ctx, const LossWeights& weights,
                      const RenderOptions& options, GradientSet* grads, LossReport* report,
                      ImageRgb* rendered = nullptr);

struct FitConfig {
    int texture_resolution = 256;
    int diffuse_order = 4;
    int specular_order = 8;
    bool softplus = false;
    SamplingConfig sampling;
    AdamConfig adam;
    LossWeights weights;
    int iterations = 20000;
    int checkpoint_interval = 1000;
    std::uint64_t seed = 0;
    int illum_dir_count = 4096;
    double target_total_loss = 0.0;  // <= 0 disables the early stop
    bool clamp_negative_light = true;
    std::filesystem::path out_dir;        // empty: no CSV / checkpoints
    std::filesystem::path gbuffer_cache;  // empty: no on-disk G-buffer cache
};

struct FitResult {
    ParameterSet params;
    AdamState adam;
    std::vector<LossReport> history;  // one entry per iteration
    int iterations_run = 0;
};

// Batch-size-1 training over the dataset's train split: each iteration
// picks one view from a seeded epoch shuffle, renders, and applies one
// Adam step. Checkpoints and a loss CSV land in config.out_dir.
FitResult fit(const SceneDataset& dataset, const sh::ShIllumination& illum_init,
              const EnvironmentMap& coverage_env, const FitConfig& config);

// ---------------------------------------------------------------------------
// Checkpoints: "RLCK" magic, version, header (resolution, orders,
// softplus, illum order), raw little-endian double arrays for every
// block, then optionally the Adam state.

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params,
                     const AdamState* adam = nullptr);
struct Checkpoint {
    ParameterSet params;
    std::optional<AdamState> adam;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Finite differences

struct FdWorst {
    std::string block;
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct FdReport {
    std::size_t tested = 0;
    double max_rel_error = 0.0;
    double mean_rel_error = 0.0;
    std::vector<FdWorst> worst;  // sorted by error, a handful

    bool passes(double tolerance) const { return max_rel_error < tolerance; }
};

// Central-difference check of the full-pipeline gradient on a small
// fixture; perturbs >= `samples_per_block` seeded parameters per block.
FdReport finite_diff_check(ParameterSet& params, const ViewContext& view,
                           const IlluminationLossContext& illum_ctx, const LossWeights& weights,
                           const RenderOptions& options, double epsilon,
                           int samples_per_block = 48, std::uint64_t seed = 0);

}  // namespace relight
