// Synthetic lesion fixtures shared by the test suites.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "lesionkit/image.hpp"

namespace fixtures {

using lesionkit::BinaryMask;
using lesionkit::FloatPlane;
using lesionkit::RasterImage;

inline BinaryMask disk_mask(int w, int h, double cx, double cy, double r) {
    BinaryMask m(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) m.set(x, y, std::hypot(x - cx, y - cy) <= r);
    return m;
}

inline BinaryMask rect_mask(int w, int h, int x0, int y0, int rw, int rh) {
    BinaryMask m(w, h);
    for (int y = y0; y < y0 + rh; ++y)
        for (int x = x0; x < x0 + rw; ++x) m.set(x, y, true);
    return m;
}

/// Rectangle of size rw x rh centered at (cx, cy), rotated by `deg` degrees
/// (image coordinates, y down).
inline BinaryMask rotated_rect_mask(int w, int h, double cx, double cy, double rw, double rh, double deg) {
    const double t = deg * 3.14159265358979323846 / 180.0;
    const double c = std::cos(t), s = std::sin(t);
    BinaryMask m(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
            const double u = c * dx + s * dy;
            const double v = -s * dx + c * dy;
            m.set(x, y, std::abs(u) <= rw / 2 && std::abs(v) <= rh / 2);
        }
    }
    return m;
}

/// Plane with `dark` inside the mask and `bright` elsewhere, plus Gaussian noise.
inline FloatPlane two_level_plane(const BinaryMask& m, double dark, double bright, double noise_sd,
                                  std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, noise_sd);
    FloatPlane p(m.width(), m.height());
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            p.at(x, y) = (m.at(x, y) ? dark : bright) + (noise_sd > 0 ? n(rng) : 0.0);
    return p;
}

struct Color {
    std::uint8_t r, g, b;
};

inline RasterImage paint(const BinaryMask& m, Color fg, Color bg) {
    RasterImage img(m.width(), m.height(), 3);
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            const Color c = m.at(x, y) ? fg : bg;
            img.at(x, y, 0) = c.r;
            img.at(x, y, 1) = c.g;
            img.at(x, y, 2) = c.b;
        }
    }
    return img;
}

inline void paint_into(RasterImage& img, const BinaryMask& m, Color c) {
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m.at(x, y)) {
                img.at(x, y, 0) = c.r;
                img.at(x, y, 1) = c.g;
                img.at(x, y, 2) = c.b;
            }
}

inline void add_noise(RasterImage& img, double sd, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, sd);
    for (auto& v : img.data()) {
        v = static_cast<std::uint8_t>(std::clamp<long>(std::lround(v + n(rng)), 0, 255));
    }
}

// Typical dermoscopy tones used by several suites.
inline constexpr Color kSkin{225, 190, 160};
inline constexpr Color kDarkBrown{90, 55, 30};
inline constexpr Color kLightBrown{190, 130, 80};
inline constexpr Color kBlack{20, 15, 15};
inline constexpr Color kBlueGray{110, 120, 150};
inline constexpr Color kRed{200, 40, 40};
inline constexpr Color kWhite{240, 240, 240};

/// Dark-brown disk lesion on skin with mild sensor noise.
inline RasterImage disk_lesion(int w, int h, double r, std::uint64_t seed = 7) {
    RasterImage img = paint(disk_mask(w, h, w / 2.0, h / 2.0, r), kDarkBrown, kSkin);
    add_noise(img, 6.0, seed);
    return img;
}

/// Star-shaped region r(theta) = r0 * (1 + sum amp_k cos(k theta + phase_k)).
inline BinaryMask wobbly_mask(int w, int h, double cx, double cy, double r0, const std::vector<double>& amps,
                              const std::vector<double>& phases) {
    BinaryMask m(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double dx = x - cx, dy = y - cy;
            const double th = std::atan2(dy, dx);
            double r = 1.0;
            for (std::size_t k = 0; k < amps.size(); ++k) r += amps[k] * std::cos((k + 2) * th + phases[k]);
            m.set(x, y, std::hypot(dx, dy) <= r0 * r);
        }
    }
    return m;
}

/// Small, round, single-toned lesion. Index varies size, position and noise.
inline RasterImage benign_lesion(int index, int w = 160, int h = 120) {
    std::mt19937_64 rng(1000 + index);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = 16 + 6 * u(rng);
    const double cx = w / 2.0 + 8 * (u(rng) - 0.5), cy = h / 2.0 + 8 * (u(rng) - 0.5);
    const auto m = wobbly_mask(w, h, cx, cy, r, {0.03 * u(rng)}, {6.28 * u(rng)});
    const Color tone{static_cast<std::uint8_t>(150 + 30 * u(rng)), static_cast<std::uint8_t>(100 + 20 * u(rng)), 65};
    RasterImage img = paint(m, tone, kSkin);
    add_noise(img, 5.0, 2000 + index);
    return img;
}

/// Large, irregular, asymmetric lesion with black and blue-gray regions.
inline RasterImage malignant_lesion(int index, int w = 160, int h = 120) {
    std::mt19937_64 rng(5000 + index);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = 38 + 6 * u(rng);
    const double cx = w / 2.0 + 6 * (u(rng) - 0.5), cy = h / 2.0 + 6 * (u(rng) - 0.5);
    const auto m = wobbly_mask(w, h, cx, cy, r, {0.22, 0.12, 0.10, 0.08, 0.06},
                               {6.28 * u(rng), 6.28 * u(rng), 6.28 * u(rng), 6.28 * u(rng), 6.28 * u(rng)});
    RasterImage img = paint(m, kDarkBrown, kSkin);
    BinaryMask black = disk_mask(w, h, cx + r * 0.35, cy - r * 0.2, r * 0.35);
    BinaryMask blue = disk_mask(w, h, cx - r * 0.4, cy + r * 0.25, r * 0.3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            black.set(x, y, black.at(x, y) && m.at(x, y));
            blue.set(x, y, blue.at(x, y) && m.at(x, y));
        }
    paint_into(img, black, kBlack);
    paint_into(img, blue, kBlueGray);
    add_noise(img, 5.0, 6000 + index);
    return img;
}

}  // namespace fixtures
