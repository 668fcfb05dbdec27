#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "relight/vec.hpp"

namespace relight {

template <typename T>
struct Raster {
    int width = 0;
    int height = 0;
    std::vector<T> data;

    Raster() = default;
    Raster(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    T& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    const T& at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return data.size(); }
};

using ImageRgb = Raster<Rgb>;
using MaskImage = Raster<std::uint8_t>;  // 0 or 1

inline double srgb_to_linear(double v) {
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}
inline double linear_to_srgb(double v) {
    return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

// PFM: "PF" (color) / "Pf" (gray) header, negative scale = little-endian
// float32, rows stored bottom-up.
void write_pfm(const std::filesystem::path& path, const ImageRgb& image);
ImageRgb read_pfm(const std::filesystem::path& path);

// 8-bit PNG. Values are clamped to [0,1] on write; `srgb_encode` applies
// the sRGB transfer curve (otherwise raw linear quantization).
void write_png_rgb(const std::filesystem::path& path, const ImageRgb& image, bool srgb_encode);
void write_png_gray(const std::filesystem::path& path, const MaskImage& mask);

struct PngImage {
    int width = 0;
    int height = 0;
    int channels = 0;  // 1 or 3
    std::vector<std::uint8_t> bytes;
};
PngImage read_png(const std::filesystem::path& path);

// Decodes a PNG as linear RGB in [0,1]; `srgb_decode` applies inverse sRGB.
ImageRgb read_png_rgb(const std::filesystem::path& path, bool srgb_decode);
// Single-channel mask thresholded at 128.
MaskImage read_png_mask(const std::filesystem::path& path);

}  // namespace relight
