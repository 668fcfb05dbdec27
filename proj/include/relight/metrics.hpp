#pragma once

#include "relight/image.hpp"

namespace relight {

// PSNR over the mask on clamped [0,1] images, MSE across channels.
// Identical images report the documented cap of 99 dB.
double psnr(const ImageRgb& a, const ImageRgb& b, const MaskImage& mask);

// SSIM on Rec.709 luminance of clamped images: 11x11 Gaussian window,
// sigma 1.5, k1 = 0.01, k2 = 0.03, dynamic range 1. The SSIM map is
// averaged over masked pixels.
double ssim(const ImageRgb& a, const ImageRgb& b, const MaskImage& mask);

// Intersection of two masks (metrics run only where both views agree).
MaskImage mask_intersection(const MaskImage& a, const MaskImage& b);

}  // namespace relight
