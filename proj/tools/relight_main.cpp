// relight: synthesize, stitch, fit, render, relight, and score scenes.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "relight/error.hpp"
#include "relight/metrics.hpp"
#include "relight/optim.hpp"
#include "relight/oracle.hpp"
#include "relight/parallel.hpp"

using namespace relight;
using nlohmann::json;

namespace {

struct RunConfig {
    // pipeline
    int texture_resolution = 256;
    int diffuse_order = 4;
    int specular_order = 8;
    bool softplus_transport = false;
    std::vector<double> diffuse_half_angles{20.0, 40.0};
    std::vector<double> specular_half_angles{5.0, 10.0};
    int samples_per_cone = 8;
    bool include_axis = true;
    // optimizer
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double lambda_chr = 1.0;
    double lambda_illum = 1.0;
    double lambda_alb = 1.0;
    int iterations = 20000;
    int checkpoint_interval = 1000;
    int illum_dirs = 4096;
    double target_total_loss = 0.0;
    double test_fraction = 0.1;
    // io
    int env_height = 64;
    bool srgb = false;
    std::uint64_t seed = 0;
    // synth
    int synth_views = 36;
    int synth_resolution = 128;
    int synth_spp = 256;
    std::string synth_material = "phong";
    std::vector<double> synth_diffuse_albedo{0.62, 0.46, 0.34};
    std::vector<double> synth_specular_albedo{0.18, 0.18, 0.18};
    double synth_phong_exponent = 12.0;
    bool synth_textured = false;
    int synth_light_order = 6;
    bool occlusion = false;
};

// Flat-key JSON config; unknown keys are an error so typos do not pass
// silently.
void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
    std::ifstream f(path);
    require(f.good(), "cannot open config: ", path.string());
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        fail(path.string(), ": JSON parse error: ", e.what());
    }
    for (auto& [key, value] : j.items()) {
        if (key == "texture_resolution") config.texture_resolution = value.get<int>();
        else if (key == "diffuse_order") config.diffuse_order = value.get<int>();
        else if (key == "specular_order") config.specular_order = value.get<int>();
        else if (key == "softplus_transport") config.softplus_transport = value.get<bool>();
        else if (key == "diffuse_half_angles") config.diffuse_half_angles = value.get<std::vector<double>>();
        else if (key == "specular_half_angles") config.specular_half_angles = value.get<std::vector<double>>();
        else if (key == "samples_per_cone") config.samples_per_cone = value.get<int>();
        else if (key == "include_axis") config.include_axis = value.get<bool>();
        else if (key == "lr") config.lr = value.get<double>();
        else if (key == "beta1") config.beta1 = value.get<double>();
        else if (key == "beta2") config.beta2 = value.get<double>();
        else if (key == "epsilon") config.epsilon = value.get<double>();
        else if (key == "lambda_chr") config.lambda_chr = value.get<double>();
        else if (key == "lambda_illum") config.lambda_illum = value.get<double>();
        else if (key == "lambda_alb") config.lambda_alb = value.get<double>();
        else if (key == "iterations") config.iterations = value.get<int>();
        else if (key == "checkpoint_interval") config.checkpoint_interval = value.get<int>();
        else if (key == "illum_dirs") config.illum_dirs = value.get<int>();
        else if (key == "target_total_loss") config.target_total_loss = value.get<double>();
        else if (key == "test_fraction") config.test_fraction = value.get<double>();
        else if (key == "env_height") config.env_height = value.get<int>();
        else if (key == "srgb") config.srgb = value.get<bool>();
        else if (key == "seed") config.seed = value.get<std::uint64_t>();
        else if (key == "synth_views") config.synth_views = value.get<int>();
        else if (key == "synth_resolution") config.synth_resolution = value.get<int>();
        else if (key == "synth_spp") config.synth_spp = value.get<int>();
        else if (key == "synth_material") config.synth_material = value.get<std::string>();
        else if (key == "synth_diffuse_albedo") config.synth_diffuse_albedo = value.get<std::vector<double>>();
        else if (key == "synth_specular_albedo") config.synth_specular_albedo = value.get<std::vector<double>>();
        else if (key == "synth_phong_exponent") config.synth_phong_exponent = value.get<double>();
        else if (key == "synth_textured") config.synth_textured = value.get<bool>();
        else if (key == "synth_light_order") config.synth_light_order = value.get<int>();
        else if (key == "occlusion") config.occlusion = value.get<bool>();
        else fail(path.string(), ": unknown config key '", key, "'");
    }
}

json config_to_json(const RunConfig& c) {
    return json{{"texture_resolution", c.texture_resolution},
                {"diffuse_order", c.diffuse_order},
                {"specular_order", c.specular_order},
                {"softplus_transport", c.softplus_transport},
                {"diffuse_half_angles", c.diffuse_half_angles},
                {"specular_half_angles", c.specular_half_angles},
                {"samples_per_cone", c.samples_per_cone},
                {"include_axis", c.include_axis},
                {"lr", c.lr},
                {"beta1", c.beta1},
                {"beta2", c.beta2},
                {"epsilon", c.epsilon},
                {"lambda_chr", c.lambda_chr},
                {"lambda_illum", c.lambda_illum},
                {"lambda_alb", c.lambda_alb},
                {"iterations", c.iterations},
                {"checkpoint_interval", c.checkpoint_interval},
                {"illum_dirs", c.illum_dirs},
                {"target_total_loss", c.target_total_loss},
                {"test_fraction", c.test_fraction},
                {"env_height", c.env_height},
                {"srgb", c.srgb},
                {"seed", c.seed},
                {"synth_views", c.synth_views},
                {"synth_resolution", c.synth_resolution},
                {"synth_spp", c.synth_spp},
                {"synth_material", c.synth_material},
                {"synth_diffuse_albedo", c.synth_diffuse_albedo},
                {"synth_specular_albedo", c.synth_specular_albedo},
                {"synth_phong_exponent", c.synth_phong_exponent},
                {"synth_textured", c.synth_textured},
                {"synth_light_order", c.synth_light_order},
                {"occlusion", c.occlusion}};
}

void echo_config(const RunConfig& config, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::ofstream f(out_dir / "effective_config.json");
    require(f.good(), "cannot write effective_config.json under ", out_dir.string());
    f << config_to_json(config).dump(2) << "\n";
}

SamplingConfig sampling_of(const RunConfig& c) {
    SamplingConfig s;
    s.diffuse_half_angles = c.diffuse_half_angles;
    s.specular_half_angles = c.specular_half_angles;
    s.samples_per_cone = c.samples_per_cone;
    s.include_axis = c.include_axis;
    return s;
}

FitConfig fit_config_of(const RunConfig& c, const std::filesystem::path& out_dir) {
    FitConfig f;
    f.texture_resolution = c.texture_resolution;
    f.diffuse_order = c.diffuse_order;
    f.specular_order = c.specular_order;
    f.softplus = c.softplus_transport;
    f.sampling = sampling_of(c);
    f.adam = AdamConfig{c.lr, c.beta1, c.beta2, c.epsilon};
    f.weights = LossWeights{c.lambda_chr, c.lambda_illum, c.lambda_alb};
    f.iterations = c.iterations;
    f.checkpoint_interval = c.checkpoint_interval;
    f.seed = c.seed;
    f.illum_dir_count = c.illum_dirs;
    f.target_total_loss = c.target_total_loss;
    f.out_dir = out_dir;
    if (const char* cache = std::getenv("PRT_RELIGHT_CACHE")) f.gbuffer_cache = cache;
    return f;
}

Rgb rgb_of(const std::vector<double>& v, const char* what) {
    require(v.size() == 3, what, " needs exactly 3 components");
    return Rgb{v[0], v[1], v[2]};
}

// Renders the listed views (default: all) of a scene with a checkpoint's
// parameters under `light`, writing PFM + PNG per view.
json render_views(const SceneDataset& dataset, const ParameterSet& params,
                  const sh::ShVector& light, const SamplingConfig& sampling,
                  const std::vector<int>& view_ids, const std::filesystem::path& out_dir,
                  bool srgb) {
    std::filesystem::create_directories(out_dir);
    TangentBasis tangents = compute_tangent_frames(dataset.mesh);
    std::filesystem::path cache;
    if (const char* env_cache = std::getenv("PRT_RELIGHT_CACHE")) cache = env_cache;

    json rendered = json::array();
    for (int vid : view_ids) {
        require(vid >= 0 && vid < static_cast<int>(dataset.views.size()),
                "view id out of range: ", vid);
        const ViewImage& view = dataset.views[vid];
        const Camera& cam = dataset.camera_of(view);
        GBuffer gb = rasterize_cached(dataset.mesh, cam, tangents, cache);
        LightSampleSet samples = make_light_samples(gb, sampling);
        RadianceImage image = relight_view(gb, params.textures, params.field, light, samples);
        std::string stem = view_image_name(cam.id);
        write_pfm(out_dir / (stem + ".pfm"), image.radiance);
        write_png_rgb(out_dir / (stem + ".png"), image.radiance, srgb);
        write_png_gray(out_dir / (stem + "_mask.png"), image.mask);
        rendered.push_back(stem);
    }
    return rendered;
}

std::vector<int> all_view_ids(const SceneDataset& dataset) {
    std::vector<int> ids(dataset.views.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
    return ids;
}

int run(int argc, char** argv) {
    CLI::App app{"Physically based free-viewpoint relighting from multi-view captures"};
    app.require_subcommand(1);

    RunConfig config;
    std::string config_path, scene_path, out_path, env_path, sh_path, checkpoint_path;
    std::string dir_a, dir_b, masks_dir;
    std::vector<int> view_ids;
    int threads = 0;
    int iters_override = -1;
    std::uint64_t seed_override = 0;
    bool seed_given = false, srgb_flag = false;

    app.add_option("--config", config_path, "JSON config file (flat keys)");
    app.add_option("--threads", threads, "worker thread cap (0 = hardware)");
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--scene", scene_path, "scene directory");
        cmd->add_option("--out", out_path, "output directory");
        cmd->add_option("--seed", seed_override, "seed override")->each([&](std::string) {
            seed_given = true;
        });
        cmd->add_flag("--srgb", srgb_flag, "inverse-sRGB decode for 8-bit image input");
    };

    CLI::App* synth = app.add_subcommand("synth", "generate a two-illumination oracle dataset");
    add_common(synth);
    CLI::App* stitch = app.add_subcommand("stitch", "stitch backgrounds into an environment map");
    add_common(stitch);
    CLI::App* fit_cmd = app.add_subcommand("fit", "fit albedo, transport, and illumination");
    add_common(fit_cmd);
    fit_cmd->add_option("--iters", iters_override, "iteration count override");
    fit_cmd->add_option("--sh", sh_path, "initial illumination SH file (skips stitching)");
    CLI::App* render = app.add_subcommand("render", "render views with fitted parameters");
    add_common(render);
    render->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    render->add_option("--views", view_ids, "view indices (default: all)");
    CLI::App* relight_cmd = app.add_subcommand("relight", "render under substituted illumination");
    add_common(relight_cmd);
    relight_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    relight_cmd->add_option("--views", view_ids, "view indices (default: all)");
    relight_cmd->add_option("--env", env_path, "equirectangular PFM/PNG environment");
    relight_cmd->add_option("--sh", sh_path, "SH coefficient file");
    CLI::App* metrics_cmd = app.add_subcommand("metrics", "PSNR/SSIM between image sets");
    metrics_cmd->add_option("--a", dir_a, "first image directory")->required();
    metrics_cmd->add_option("--b", dir_b, "second image directory")->required();
    metrics_cmd->add_option("--masks", masks_dir, "mask directory (default: masks beside --a)");
    CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
    gradcheck->add_option("--seed", seed_override, "fixture seed")->each([&](std::string) {
        seed_given = true;
    });
    double fd_eps = 1e-4, fd_tol = 1e-4;
    gradcheck->add_option("--eps", fd_eps, "central-difference step");
    gradcheck->add_option("--tol", fd_tol, "max relative error tolerance");

    CLI11_PARSE(app, argc, argv);

    if (!config_path.empty()) apply_config_file(config, config_path);
    if (seed_given) config.seed = seed_override;
    if (srgb_flag) config.srgb = true;
    if (threads > 0) set_thread_count(threads);

    json summary;
    summary["command"] = app.get_subcommands().front()->get_name();

    if (synth->parsed()) {
        require(!out_path.empty(), "synth: --out is required");
        SceneGenConfig gen;
        gen.view_count = config.synth_views;
        gen.resolution = config.synth_resolution;
        gen.seed = config.seed;
        gen.reference.spp = config.synth_spp;
        gen.reference.seed = config.seed;
        gen.material.kind = config.synth_material == "lambert" ? AnalyticMaterial::Kind::kLambert
                                                               : AnalyticMaterial::Kind::kPhong;
        gen.material.diffuse_albedo = rgb_of(config.synth_diffuse_albedo, "synth_diffuse_albedo");
        gen.material.specular_albedo =
            rgb_of(config.synth_specular_albedo, "synth_specular_albedo");
        gen.material.phong_exponent = config.synth_phong_exponent;
        gen.material.textured_diffuse = config.synth_textured;
        // Warm training light, cool relighting light (distinct tones).
        sh::ShVector light_a = make_positive_light(config.synth_light_order, config.seed + 1,
                                                   Rgb{1.05, 0.95, 0.8}, 0.5);
        sh::ShVector light_b = make_positive_light(config.synth_light_order, config.seed + 2,
                                                   Rgb{0.55, 0.75, 1.1}, 0.5);
        gen.light_a = OracleLight::from_env(environment_from_sh(light_a, config.env_height));
        gen.light_b = OracleLight::from_env(environment_from_sh(light_b, config.env_height));
        GeneratedScenes scenes = generate_scene(gen);
        write_generated_scenes(scenes, gen, out_path);
        echo_config(config, out_path);
        summary["scenes"] = {(std::filesystem::path(out_path) / "a").string(),
                             (std::filesystem::path(out_path) / "b").string()};
        summary["views"] = gen.view_count;
        summary["resolution"] = gen.resolution;
    } else if (stitch->parsed()) {
        require(!scene_path.empty() && !out_path.empty(), "stitch: --scene and --out are required");
        SceneDataset dataset = load_scene(scene_path, config.srgb);
        EnvironmentMap env = stitch_environment(dataset, config.env_height);
        sh::ShIllumination illum = init_illumination(env);
        std::filesystem::create_directories(out_path);
        save_environment(env, std::filesystem::path(out_path) / "env.pfm");
        sh::save_sh(illum.initial, std::filesystem::path(out_path) / "init.sh");
        echo_config(config, out_path);
        std::size_t covered = std::count(env.coverage.data.begin(), env.coverage.data.end(), 1);
        summary["covered_texels"] = covered;
        summary["coverage_fraction"] = static_cast<double>(covered) / env.coverage.size();
        summary["sh_file"] = (std::filesystem::path(out_path) / "init.sh").string();
    } else if (fit_cmd->parsed()) {
        require(!scene_path.empty() && !out_path.empty(), "fit: --scene and --out are required");
        std::filesystem::create_directories(out_path);
        SceneDataset dataset = load_scene(scene_path, config.srgb);
        dataset = split_views(dataset, config.test_fraction, config.seed);
        sh::ShIllumination illum;
        EnvironmentMap coverage;
        if (!sh_path.empty()) {
            sh::ShVector init = sh::load_sh(sh_path);
            require(init.order == 10, sh_path, ": fit expects an order-10 SH file");
            illum.current = init;
            illum.initial = init;
            coverage = EnvironmentMap(config.env_height);
            std::fill(coverage.coverage.data.begin(), coverage.coverage.data.end(), 1);
        } else {
            coverage = stitch_environment(dataset, config.env_height);
            illum = init_illumination(coverage);
            save_environment(coverage, std::filesystem::path(out_path) / "env.pfm");
        }
        FitConfig fc = fit_config_of(config, out_path);
        if (iters_override > 0) fc.iterations = iters_override;
        echo_config(config, out_path);
        FitResult result = fit(dataset, illum, coverage, fc);
        summary["iterations"] = result.iterations_run;
        summary["final_loss"] = {{"im", result.history.back().im},
                                 {"chr", result.history.back().chr},
                                 {"illum", result.history.back().illum},
                                 {"alb", result.history.back().alb},
                                 {"total", result.history.back().total}};
        summary["checkpoint"] = (std::filesystem::path(out_path) / "checkpoint_final.bin").string();
        summary["train_views"] = dataset.train_ids.size();
        summary["test_views"] = dataset.test_ids.size();
    } else if (render->parsed() || relight_cmd->parsed()) {
        require(!scene_path.empty() && !out_path.empty(), "--scene and --out are required");
        SceneDataset dataset = load_scene(scene_path, config.srgb);
        Checkpoint ckpt = load_checkpoint(checkpoint_path);
        sh::ShVector light = ckpt.params.illum.current;
        if (relight_cmd->parsed()) {
            require(env_path.empty() || sh_path.empty(), "relight: pass --env or --sh, not both");
            if (!sh_path.empty()) {
                light = sh::load_sh(sh_path);
            } else if (!env_path.empty()) {
                EnvironmentMap env = load_environment(env_path);
                auto fn = [&env](Vec3 d) { return env.nearest(d); };
                light = sh::project_equirect(fn, 10, env.height);
            }
            require(light.order <= 10, "relight: light order exceeds 10");
        }
        std::vector<int> ids = view_ids.empty() ? all_view_ids(dataset) : view_ids;
        summary["rendered"] =
            render_views(dataset, ckpt.params, light, sampling_of(config), ids, out_path,
                         config.srgb);
        echo_config(config, out_path);
    } else if (metrics_cmd->parsed()) {
        namespace fs = std::filesystem;
        std::vector<std::string> stems;
        for (const auto& entry : fs::directory_iterator(dir_a)) {
            if (entry.path().extension() == ".pfm") stems.push_back(entry.path().stem().string());
        }
        std::sort(stems.begin(), stems.end());
        require(!stems.empty(), "metrics: no .pfm images under ", dir_a);
        json per_image = json::array();
        double psnr_sum = 0.0, ssim_sum = 0.0;
        std::size_t count = 0;
        for (const std::string& stem : stems) {
            fs::path pa = fs::path(dir_a) / (stem + ".pfm");
            fs::path pb = fs::path(dir_b) / (stem + ".pfm");
            if (!fs::exists(pb)) continue;
            ImageRgb a = read_pfm(pa);
            ImageRgb b = read_pfm(pb);
            MaskImage mask(a.width, a.height, 1);
            auto try_mask = [&](const fs::path& p) {
                if (fs::exists(p)) mask = mask_intersection(mask, read_png_mask(p));
            };
            if (!masks_dir.empty()) {
                try_mask(fs::path(masks_dir) / (stem + ".png"));
            } else {
                try_mask(fs::path(dir_a) / (stem + "_mask.png"));
                try_mask(fs::path(dir_b) / (stem + "_mask.png"));
            }
            double p = psnr(a, b, mask);
            double s = ssim(a, b, mask);
            per_image.push_back({{"image", stem}, {"psnr", p}, {"ssim", s}});
            psnr_sum += p;
            ssim_sum += s;
            ++count;
        }
        require(count > 0, "metrics: no matching image pairs between ", dir_a, " and ", dir_b);
        summary["images"] = per_image;
        summary["mean_psnr"] = psnr_sum / count;
        summary["mean_ssim"] = ssim_sum / count;
        summary["count"] = count;
    } else if (gradcheck->parsed()) {
        auto fx = make_fd_fixture(config.seed);
        FdReport report = finite_diff_check(fx->params, fx->context, fx->illum_ctx, fx->weights,
                                            fx->options, fd_eps, 48, config.seed);
        summary["tested"] = report.tested;
        summary["max_rel_error"] = report.max_rel_error;
        summary["mean_rel_error"] = report.mean_rel_error;
        summary["tolerance"] = fd_tol;
        summary["pass"] = report.passes(fd_tol);
        json worst = json::array();
        for (const FdWorst& w : report.worst) {
            worst.push_back({{"block", w.block},
                             {"index", w.index},
                             {"analytic", w.analytic},
                             {"numeric", w.numeric},
                             {"rel_error", w.rel_error}});
        }
        summary["worst"] = worst;
        std::cout << summary.dump(2) << std::endl;
        return report.passes(fd_tol) ? 0 : 1;
    }

    std::cout << summary.dump(2) << std::endl;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << std::endl;
        return 2;
    }
}
