#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lesionkit/image.hpp"

namespace lesionkit::imaging {

/// ITU-R BT.601 luma/chroma weights.
inline constexpr double kLumaR = 0.299000;
inline constexpr double kLumaG = 0.587000;
inline constexpr double kLumaB = 0.114000;
inline constexpr double kChromaU = 0.492111;  // U = 0.492111 (B - Y')
inline constexpr double kChromaV = 0.877283;  // V = 0.877283 (R - Y')

struct YuvPlanes {
    FloatPlane y;
    FloatPlane u;
    FloatPlane v;
};

struct HsvPlanes {
    FloatPlane h;  // degrees, [0, 360)
    FloatPlane s;  // [0, 1]
    FloatPlane v;  // [0, 1]
};

struct Hsv {
    double h = 0.0;
    double s = 0.0;
    double v = 0.0;
};

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    bool operator==(const Rgb&) const = default;
};

/// Y' in [0,1], U and V centered at 0. Requires a 3-channel image.
YuvPlanes rgb_to_yuv(const RasterImage& img);

/// Hexcone HSV. Achromatic pixels get hue 0.
HsvPlanes rgb_to_hsv(const RasterImage& img);
Hsv rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// Normalized sampled Gaussian, `kernel_size` taps.
std::vector<double> gaussian_kernel(int kernel_size, double sigma);

/// Separable Gaussian convolution with mirror (reflect-101) padding.
FloatPlane gaussian_filter(const FloatPlane& plane, int kernel_size, double sigma);

/// Kernel size covering +-3 sigma, always odd.
int kernel_size_for_sigma(double sigma);

/// out = (1 - opacity) * base + opacity * overlay, rounded. A 1-channel
/// operand is broadcast to three channels when the other has three.
RasterImage blend_overlay(const RasterImage& base, const RasterImage& overlay, double opacity);

/// Fixed 256-entry blue -> green -> red ramp.
const std::array<Rgb, 256>& heat_ramp();

/// Maps each value in [0,1] through `heat_ramp()` at index round(v * 255).
RasterImage colorize(const FloatPlane& saliency);

/// Nearest-neighbor rescale; the result stays strictly binary.
BinaryMask resample_mask(const BinaryMask& mask, int new_width, int new_height);

/// Area-averaging downscale (or bilinear upscale) of a real plane.
FloatPlane resize_plane(const FloatPlane& plane, int new_width, int new_height);

/// Per-channel resize_plane, rounded back to 8 bits.
RasterImage resize_image(const RasterImage& img, int new_width, int new_height);
/// Shrinks so the longer side is at most `max_side`; smaller images pass through.
RasterImage limit_size(const RasterImage& img, int max_side);

/// Gray images are replicated to three channels; 3-channel images pass through.
RasterImage ensure_rgb(const RasterImage& img);

/// Paints every foreground pixel of `mask` with `color` on a copy of `img`.
RasterImage paint_mask(const RasterImage& img, const BinaryMask& mask, Rgb color);

}  // namespace lesionkit::imaging
