#include "relight/metrics.hpp"

#include <cmath>
#include <vector>

#include "relight/error.hpp"

namespace relight {

namespace {
constexpr double kPsnrCap = 99.0;

double luminance(Rgb c) {
    Rgb v = clamp01(c);
    return 0.2126 * v.r + 0.7152 * v.g + 0.0722 * v.b;
}
}  // namespace

MaskImage mask_intersection(const MaskImage& a, const MaskImage& b) {
    require(a.width == b.width && a.height == b.height, "mask_intersection: size mismatch");
    MaskImage out(a.width, a.height, 0);
    for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = (a.data[i] && b.data[i]) ? 1 : 0;
    return out;
}

double psnr(const ImageRgb& a, const ImageRgb& b, const MaskImage& mask) {
    require(a.width == b.width && a.height == b.height, "psnr: image size mismatch");
    require(a.width == mask.width && a.height == mask.height, "psnr: mask size mismatch");
    double se = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask.data[i]) continue;
        Rgb d = clamp01(a.data[i]) - clamp01(b.data[i]);
        se += d.r * d.r + d.g * d.g + d.b * d.b;
        ++n;
    }
    require(n > 0, "psnr: empty mask");
    double mse = se / (3.0 * static_cast<double>(n));
    if (mse <= 0.0) return kPsnrCap;
    return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

namespace {

// Separable Gaussian filter; pixels outside the image are skipped and the
// kernel renormalized (only matters within 5 px of the border).
Raster<double> gaussian_filter(const Raster<double>& img, const std::vector<double>& kernel) {
    int radius = static_cast<int>(kernel.size()) / 2;
    Raster<double> tmp(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0, wsum = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                int xx = x + k;
                if (xx < 0 || xx >= img.width) continue;
                double w = kernel[k + radius];
                acc += w * img.at(xx, y);
                wsum += w;
            }
            tmp.at(x, y) = acc / wsum;
        }
    }
    Raster<double> out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0, wsum = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                int yy = y + k;
                if (yy < 0 || yy >= img.height) continue;
                double w = kernel[k + radius];
                acc += w * tmp.at(x, yy);
                wsum += w;
            }
            out.at(x, y) = acc / wsum;
        }
    }
    return out;
}

}  // namespace

double ssim(const ImageRgb& a, const ImageRgb& b, const MaskImage& mask) {
    require(a.width == b.width && a.height == b.height, "ssim: image size mismatch");
    require(a.width == mask.width && a.height == mask.height, "ssim: mask size mismatch");

    const int radius = 5;  // 11x11 window
    const double sigma = 1.5;
    std::vector<double> kernel(2 * radius + 1);
    for (int k = -radius; k <= radius; ++k)
        kernel[k + radius] = std::exp(-0.5 * (k * k) / (sigma * sigma));

    Raster<double> x(a.width, a.height), y(a.width, a.height);
    Raster<double> xx(a.width, a.height), yy(a.width, a.height), xy(a.width, a.height);
    for (std::size_t i = 0; i < x.size(); ++i) {
        double va = luminance(a.data[i]);
        double vb = luminance(b.data[i]);
        x.data[i] = va;
        y.data[i] = vb;
        xx.data[i] = va * va;
        yy.data[i] = vb * vb;
        xy.data[i] = va * vb;
    }
    Raster<double> mu_x = gaussian_filter(x, kernel);
    Raster<double> mu_y = gaussian_filter(y, kernel);
    Raster<double> s_xx = gaussian_filter(xx, kernel);
    Raster<double> s_yy = gaussian_filter(yy, kernel);
    Raster<double> s_xy = gaussian_filter(xy, kernel);

    const double c1 = 0.01 * 0.01;
    const double c2 = 0.03 * 0.03;
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask.data[i]) continue;
        double mx = mu_x.data[i], my = mu_y.data[i];
        double vx = s_xx.data[i] - mx * mx;
        double vy = s_yy.data[i] - my * my;
        double cxy = s_xy.data[i] - mx * my;
        double value = ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) /
                       ((mx * mx + my * my + c1) * (vx + vy + c2));
        sum += value;
        ++n;
    }
    require(n > 0, "ssim: empty mask");
    return sum / static_cast<double>(n);
}

}  // namespace relight
