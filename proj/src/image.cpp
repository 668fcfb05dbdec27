#include "relight/image.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include "relight/error.hpp"

namespace relight {

namespace {

bool host_is_little_endian() {
    std::uint16_t probe = 1;
    std::uint8_t first;
    std::memcpy(&first, &probe, 1);
    return first == 1;
}

void swap_float_bytes(float* values, std::size_t count) {
    auto* bytes = reinterpret_cast<std::uint8_t*>(values);
    for (std::size_t i = 0; i < count; ++i) {
        std::swap(bytes[4 * i + 0], bytes[4 * i + 3]);
        std::swap(bytes[4 * i + 1], bytes[4 * i + 2]);
    }
}

}  // namespace

void write_pfm(const std::filesystem::path& path, const ImageRgb& image) {
    require(image.width > 0 && image.height > 0, "write_pfm: empty image");
    std::ofstream f(path, std::ios::binary);
    require(f.good(), "cannot open for writing: ", path.string());
    f << "PF\n" << image.width << " " << image.height << "\n-1.0\n";
    std::vector<float> row(static_cast<std::size_t>(image.width) * 3);
    for (int y = image.height - 1; y >= 0; --y) {
        for (int x = 0; x < image.width; ++x) {
            const Rgb& p = image.at(x, y);
            row[3 * x + 0] = static_cast<float>(p.r);
            row[3 * x + 1] = static_cast<float>(p.g);
            row[3 * x + 2] = static_cast<float>(p.b);
        }
        if (!host_is_little_endian()) swap_float_bytes(row.data(), row.size());
        f.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    require(f.good(), "write failed: ", path.string());
}

ImageRgb read_pfm(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), "cannot open PFM: ", path.string());
    std::string magic;
    int width = 0, height = 0;
    double scale = 0.0;
    f >> magic >> width >> height >> scale;
    require(magic == "PF" || magic == "Pf", path.string(), ": not a PFM file");
    require(width > 0 && height > 0, path.string(), ": bad PFM dimensions");
    require(scale != 0.0, path.string(), ": bad PFM scale");
    f.get();  // single whitespace after the header
    bool gray = (magic == "Pf");
    bool file_little = scale < 0.0;
    int channels = gray ? 1 : 3;

    ImageRgb image(width, height);
    std::vector<float> row(static_cast<std::size_t>(width) * channels);
    for (int y = height - 1; y >= 0; --y) {
        f.read(reinterpret_cast<char*>(row.data()),
               static_cast<std::streamsize>(row.size() * sizeof(float)));
        require(f.good(), path.string(), ": truncated PFM data");
        if (file_little != host_is_little_endian()) swap_float_bytes(row.data(), row.size());
        for (int x = 0; x < width; ++x) {
            if (gray) {
                double v = row[x];
                image.at(x, y) = Rgb{v, v, v};
            } else {
                image.at(x, y) = Rgb{row[3 * x], row[3 * x + 1], row[3 * x + 2]};
            }
        }
    }
    return image;
}

// ---------------------------------------------------------------------------
// PNG via libpng

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::uint8_t quantize8(double v) {
    double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    return static_cast<std::uint8_t>(c * 255.0 + 0.5);
}

void write_png_bytes(const std::filesystem::path& path, int width, int height, int channels,
                     const std::vector<std::uint8_t>& bytes) {
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    require(fp != nullptr, "cannot open for writing: ", path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    require(png != nullptr, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        fail("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail("libpng write error: ", path.string());
    }
    png_init_io(png, fp.get());
    int color_type = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) {
        rows[y] = const_cast<png_bytep>(bytes.data() + static_cast<std::size_t>(y) * width * channels);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_png_rgb(const std::filesystem::path& path, const ImageRgb& image, bool srgb_encode) {
    require(image.width > 0 && image.height > 0, "write_png_rgb: empty image");
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(image.width) * image.height * 3);
    std::size_t i = 0;
    for (const Rgb& p : image.data) {
        Rgb c = clamp01(p);
        if (srgb_encode) c = Rgb{linear_to_srgb(c.r), linear_to_srgb(c.g), linear_to_srgb(c.b)};
        bytes[i++] = quantize8(c.r);
        bytes[i++] = quantize8(c.g);
        bytes[i++] = quantize8(c.b);
    }
    write_png_bytes(path, image.width, image.height, 3, bytes);
}

void write_png_gray(const std::filesystem::path& path, const MaskImage& mask) {
    require(mask.width > 0 && mask.height > 0, "write_png_gray: empty image");
    std::vector<std::uint8_t> bytes(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) bytes[i] = mask.data[i] ? 255 : 0;
    write_png_bytes(path, mask.width, mask.height, 1, bytes);
}

PngImage read_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    require(fp != nullptr, "cannot open PNG: ", path.string());
    png_byte header[8];
    require(std::fread(header, 1, 8, fp.get()) == 8 && !png_sig_cmp(header, 0, 8),
            path.string(), ": not a PNG file");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    require(png != nullptr, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail("libpng read error: ", path.string());
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    png_set_expand(png);           // palette/low-bit-depth -> 8-bit
    png_set_strip_16(png);         // 16-bit -> 8-bit
    png_set_strip_alpha(png);
    int color_type = png_get_color_type(png, info);
    bool gray = (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA);
    if (!gray && color_type == PNG_COLOR_TYPE_PALETTE) gray = false;
    png_read_update_info(png, info);

    PngImage out;
    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = gray ? 1 : 3;
    std::size_t rowbytes = png_get_rowbytes(png, info);
    require(rowbytes == static_cast<std::size_t>(out.width) * out.channels,
            path.string(), ": unexpected PNG row size");
    out.bytes.resize(rowbytes * out.height);
    std::vector<png_bytep> rows(out.height);
    for (int y = 0; y < out.height; ++y) rows[y] = out.bytes.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

ImageRgb read_png_rgb(const std::filesystem::path& path, bool srgb_decode) {
    PngImage png = read_png(path);
    ImageRgb image(png.width, png.height);
    for (int y = 0; y < png.height; ++y) {
        for (int x = 0; x < png.width; ++x) {
            std::size_t i = (static_cast<std::size_t>(y) * png.width + x) * png.channels;
            Rgb c;
            if (png.channels == 1) {
                double v = png.bytes[i] / 255.0;
                c = Rgb{v, v, v};
            } else {
                c = Rgb{png.bytes[i] / 255.0, png.bytes[i + 1] / 255.0, png.bytes[i + 2] / 255.0};
            }
            if (srgb_decode) c = Rgb{srgb_to_linear(c.r), srgb_to_linear(c.g), srgb_to_linear(c.b)};
            image.at(x, y) = c;
        }
    }
    return image;
}

MaskImage read_png_mask(const std::filesystem::path& path) {
    PngImage png = read_png(path);
    MaskImage mask(png.width, png.height);
    for (int y = 0; y < png.height; ++y) {
        for (int x = 0; x < png.width; ++x) {
            std::size_t i = (static_cast<std::size_t>(y) * png.width + x) * png.channels;
            // RGB masks count as covered when the first channel clears the threshold.
            mask.at(x, y) = png.bytes[i] >= 128 ? 1 : 0;
        }
    }
    return mask;
}

}  // namespace relight
