#include "relight/envmap.hpp"

#include <algorithm>

#include "relight/error.hpp"
#include "relight/parallel.hpp"

namespace relight {

namespace {

// Lower median: element (n-1)/2 of the sorted values, deterministic for
// even counts.
double lower_median(std::vector<double>& values) {
    std::size_t k = (values.size() - 1) / 2;
    std::nth_element(values.begin(), values.begin() + k, values.end());
    return values[k];
}

}  // namespace

EnvironmentMap stitch_environment(const SceneDataset& dataset, int map_height) {
    require(map_height > 0, "stitch_environment: map_height must be positive");
    EnvironmentMap env(map_height);
    std::size_t texel_count = env.texels.size();

    // Bin per view in parallel, then merge in view order so the
    // contribution lists are reproducible.
    struct ViewBins {
        std::vector<std::uint32_t> texel;
        std::vector<Rgb> value;
    };
    std::vector<ViewBins> bins(dataset.views.size());
    parallel_blocks(dataset.views.size(), [&](std::size_t vi) {
        const ViewImage& view = dataset.views[vi];
        const Camera& cam = dataset.camera_of(view);
        ViewBins& vb = bins[vi];
        for (int y = 0; y < view.pixels.height; ++y) {
            for (int x = 0; x < view.pixels.width; ++x) {
                if (view.mask.at(x, y)) continue;  // object pixel
                Vec3 dir = cam.ray_dir(x + 0.5, y + 0.5);
                int ix, iy;
                equirect_texel_of(dir, env.width, env.height, ix, iy);
                vb.texel.push_back(static_cast<std::uint32_t>(iy) * env.width + ix);
                vb.value.push_back(view.pixels.at(x, y));
            }
        }
    });

    std::vector<std::uint32_t> counts(texel_count, 0);
    std::size_t total = 0;
    for (const ViewBins& vb : bins) {
        total += vb.texel.size();
        for (std::uint32_t t : vb.texel) ++counts[t];
    }
    require(total > 0,
            "stitch_environment: no background pixels in any view; "
            "supply ground-truth illumination instead");

    std::vector<std::size_t> offsets(texel_count + 1, 0);
    for (std::size_t t = 0; t < texel_count; ++t) offsets[t + 1] = offsets[t] + counts[t];
    std::vector<Rgb> contributions(total);
    {
        std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
        for (const ViewBins& vb : bins) {
            for (std::size_t i = 0; i < vb.texel.size(); ++i) {
                contributions[cursor[vb.texel[i]]++] = vb.value[i];
            }
        }
    }

    parallel_ranges(texel_count, 4096, [&](std::size_t lo, std::size_t hi, std::size_t) {
        std::vector<double> channel;
        for (std::size_t t = lo; t < hi; ++t) {
            std::size_t begin = offsets[t], end = offsets[t + 1];
            if (begin == end) continue;
            Rgb median;
            for (int c = 0; c < 3; ++c) {
                channel.clear();
                for (std::size_t i = begin; i < end; ++i) channel.push_back(contributions[i][c]);
                median[c] = lower_median(channel);
            }
            env.texels.data[t] = median;
            env.coverage.data[t] = 1;
        }
    });
    return env;
}

sh::ShIllumination init_illumination(const EnvironmentMap& env, int order) {
    bool any = std::any_of(env.coverage.data.begin(), env.coverage.data.end(),
                           [](std::uint8_t c) { return c != 0; });
    require(any, "init_illumination: environment map has no covered texels");

    // The quadrature grid matches the map resolution, so each node lands
    // exactly on its texel and masking is exact.
    auto fn = [&env](Vec3 dir) -> Rgb {
        int ix, iy;
        equirect_texel_of(dir, env.width, env.height, ix, iy);
        return env.coverage.at(ix, iy) ? env.texels.at(ix, iy) : Rgb{};
    };
    sh::ShVector coeffs = sh::project_equirect(fn, order, env.height);
    return sh::ShIllumination{coeffs, coeffs};
}

void save_environment(const EnvironmentMap& env, const std::filesystem::path& pfm_path) {
    write_pfm(pfm_path, env.texels);
    std::filesystem::path cov = pfm_path;
    cov.replace_filename(pfm_path.stem().string() + "_coverage.png");
    write_png_gray(cov, env.coverage);
}

EnvironmentMap load_environment(const std::filesystem::path& pfm_path) {
    EnvironmentMap env;
    if (pfm_path.extension() == ".png") {
        env.texels = read_png_rgb(pfm_path, /*srgb_decode=*/true);
    } else {
        env.texels = read_pfm(pfm_path);
    }
    env.width = env.texels.width;
    env.height = env.texels.height;
    require(env.width == 2 * env.height, pfm_path.string(),
            ": equirectangular map must be 2:1, got ", env.width, "x", env.height);
    std::filesystem::path cov = pfm_path;
    cov.replace_filename(pfm_path.stem().string() + "_coverage.png");
    if (std::filesystem::exists(cov)) {
        env.coverage = read_png_mask(cov);
        require(env.coverage.width == env.width && env.coverage.height == env.height,
                cov.string(), ": coverage size mismatch");
    } else {
        env.coverage = MaskImage(env.width, env.height, 1);
    }
    return env;
}

EnvironmentMap environment_from_sh(const sh::ShVector& light, int height) {
    EnvironmentMap env(height);
    for (int iy = 0; iy < env.height; ++iy) {
        for (int ix = 0; ix < env.width; ++ix) {
            Vec3 dir = equirect_texel_dir(ix, iy, env.width, env.height);
            env.texels.at(ix, iy) = sh::eval_radiance(light, dir);
            env.coverage.at(ix, iy) = 1;
        }
    }
    return env;
}

}  // namespace relight
