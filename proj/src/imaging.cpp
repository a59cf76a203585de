#include "lesionkit/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lesionkit::imaging {

namespace {

void require_rgb(const RasterImage& img, const char* op) {
    if (img.channels() != 3) {
        throw InvalidInput(std::string(op) + ": expected a 3-channel image, got " +
                           std::to_string(img.channels()));
    }
}

// Reflect-101 index folding: gfedcb|abcdefgh|gfedcba
int reflect101(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

std::uint8_t round_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

YuvPlanes rgb_to_yuv(const RasterImage& img) {
    require_rgb(img, "rgb_to_yuv");
    YuvPlanes out{FloatPlane(img.width(), img.height()), FloatPlane(img.width(), img.height()),
                  FloatPlane(img.width(), img.height())};
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const double r = img.at(x, y, 0) / 255.0;
            const double g = img.at(x, y, 1) / 255.0;
            const double b = img.at(x, y, 2) / 255.0;
            const double luma = kLumaR * r + kLumaG * g + kLumaB * b;
            out.y.at(x, y) = std::clamp(luma, 0.0, 1.0);
            out.u.at(x, y) = kChromaU * (b - luma);
            out.v.at(x, y) = kChromaV * (r - luma);
        }
    }
    return out;
}

Hsv rgb_to_hsv(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
    const double r = r8 / 255.0;
    const double g = g8 / 255.0;
    const double b = b8 / 255.0;
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double delta = mx - mn;
    Hsv out;
    out.v = mx;
    out.s = mx > 0.0 ? delta / mx : 0.0;
    if (delta <= 0.0) {
        out.h = 0.0;
        return out;
    }
    double h;
    if (mx == r) {
        h = 60.0 * std::fmod((g - b) / delta, 6.0);
    } else if (mx == g) {
        h = 60.0 * ((b - r) / delta + 2.0);
    } else {
        h = 60.0 * ((r - g) / delta + 4.0);
    }
    if (h < 0.0) h += 360.0;
    if (h >= 360.0) h -= 360.0;
    out.h = h;
    return out;
}

HsvPlanes rgb_to_hsv(const RasterImage& img) {
    require_rgb(img, "rgb_to_hsv");
    HsvPlanes out{FloatPlane(img.width(), img.height()), FloatPlane(img.width(), img.height()),
                  FloatPlane(img.width(), img.height())};
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const Hsv p = rgb_to_hsv(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
            out.h.at(x, y) = p.h;
            out.s.at(x, y) = p.s;
            out.v.at(x, y) = p.v;
        }
    }
    return out;
}

std::vector<double> gaussian_kernel(int kernel_size, double sigma) {
    if (kernel_size < 1 || kernel_size % 2 == 0) {
        throw InvalidParameter("gaussian kernel size must be odd and >= 1, got " +
                               std::to_string(kernel_size));
    }
    if (!(sigma > 0.0)) {
        throw InvalidParameter("gaussian sigma must be > 0");
    }
    const int half = kernel_size / 2;
    std::vector<double> k(kernel_size);
    double sum = 0.0;
    for (int i = 0; i < kernel_size; ++i) {
        const double d = i - half;
        k[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
        sum += k[i];
    }
    for (double& w : k) w /= sum;
    return k;
}

int kernel_size_for_sigma(double sigma) {
    return 2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1;
}

FloatPlane gaussian_filter(const FloatPlane& plane, int kernel_size, double sigma) {
    const auto k = gaussian_kernel(kernel_size, sigma);
    const int half = kernel_size / 2;
    const int w = plane.width();
    const int h = plane.height();

    FloatPlane tmp(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -half; i <= half; ++i) acc += k[i + half] * plane.at(reflect101(x + i, w), y);
            tmp.at(x, y) = acc;
        }
    }
    FloatPlane out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -half; i <= half; ++i) acc += k[i + half] * tmp.at(x, reflect101(y + i, h));
            out.at(x, y) = acc;
        }
    }
    return out;
}

RasterImage blend_overlay(const RasterImage& base, const RasterImage& overlay, double opacity) {
    if (base.width() != overlay.width() || base.height() != overlay.height()) {
        throw InvalidInput("blend_overlay: dimension mismatch");
    }
    if (!(opacity >= 0.0 && opacity <= 1.0)) {
        throw InvalidParameter("blend_overlay: opacity must be in [0,1]");
    }
    const int channels = std::max(base.channels(), overlay.channels());
    RasterImage out(base.width(), base.height(), channels);
    for (int y = 0; y < base.height(); ++y) {
        for (int x = 0; x < base.width(); ++x) {
            for (int c = 0; c < channels; ++c) {
                const double b = base.at(x, y, base.channels() == 1 ? 0 : c);
                const double o = overlay.at(x, y, overlay.channels() == 1 ? 0 : c);
                if (opacity == 0.0) {
                    out.at(x, y, c) = static_cast<std::uint8_t>(b);
                } else if (opacity == 1.0) {
                    out.at(x, y, c) = static_cast<std::uint8_t>(o);
                } else {
                    out.at(x, y, c) = round_u8((1.0 - opacity) * b + opacity * o);
                }
            }
        }
    }
    return out;
}

const std::array<Rgb, 256>& heat_ramp() {
    static const std::array<Rgb, 256> table = [] {
        std::array<Rgb, 256> t{};
        for (int i = 0; i < 256; ++i) {
            const double s = i / 255.0;
            if (s <= 0.5) {
                t[i] = Rgb{0, round_u8(510.0 * s), round_u8(255.0 - 510.0 * s)};
            } else {
                t[i] = Rgb{round_u8(510.0 * s - 255.0), round_u8(510.0 - 510.0 * s), 0};
            }
        }
        return t;
    }();
    return table;
}

RasterImage colorize(const FloatPlane& saliency) {
    const auto& ramp = heat_ramp();
    RasterImage out(saliency.width(), saliency.height(), 3);
    for (int y = 0; y < saliency.height(); ++y) {
        for (int x = 0; x < saliency.width(); ++x) {
            const double v = saliency.at(x, y);
            if (!(v >= 0.0 && v <= 1.0)) {
                throw InvalidInput("colorize: values must lie in [0,1]");
            }
            const Rgb c = ramp[static_cast<std::size_t>(std::lround(v * 255.0))];
            out.at(x, y, 0) = c.r;
            out.at(x, y, 1) = c.g;
            out.at(x, y, 2) = c.b;
        }
    }
    return out;
}

BinaryMask resample_mask(const BinaryMask& mask, int new_width, int new_height) {
    if (new_width < 1 || new_height < 1) {
        throw InvalidParameter("resample_mask: target dimensions must be >= 1");
    }
    BinaryMask out(new_width, new_height);
    const double sx = static_cast<double>(mask.width()) / new_width;
    const double sy = static_cast<double>(mask.height()) / new_height;
    for (int y = 0; y < new_height; ++y) {
        const int src_y = std::min(mask.height() - 1, static_cast<int>(std::floor((y + 0.5) * sy)));
        for (int x = 0; x < new_width; ++x) {
            const int src_x = std::min(mask.width() - 1, static_cast<int>(std::floor((x + 0.5) * sx)));
            out.set(x, y, mask.at(src_x, src_y));
        }
    }
    return out;
}

FloatPlane resize_plane(const FloatPlane& plane, int new_width, int new_height) {
    if (new_width < 1 || new_height < 1) {
        throw InvalidParameter("resize_plane: target dimensions must be >= 1");
    }
    const double sx = static_cast<double>(plane.width()) / new_width;
    const double sy = static_cast<double>(plane.height()) / new_height;
    FloatPlane out(new_width, new_height);
    if (sx <= 1.0 && sy <= 1.0) {
        // bilinear upscale, pixel-center aligned
        for (int y = 0; y < new_height; ++y) {
            const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, plane.height() - 1.0);
            const int y0 = static_cast<int>(fy);
            const int y1 = std::min(y0 + 1, plane.height() - 1);
            const double ty = fy - y0;
            for (int x = 0; x < new_width; ++x) {
                const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, plane.width() - 1.0);
                const int x0 = static_cast<int>(fx);
                const int x1 = std::min(x0 + 1, plane.width() - 1);
                const double tx = fx - x0;
                const double top = plane.at(x0, y0) * (1 - tx) + plane.at(x1, y0) * tx;
                const double bot = plane.at(x0, y1) * (1 - tx) + plane.at(x1, y1) * tx;
                out.at(x, y) = top * (1 - ty) + bot * ty;
            }
        }
        return out;
    }
    // box average with fractional coverage
    for (int y = 0; y < new_height; ++y) {
        const double y_lo = y * sy;
        const double y_hi = (y + 1) * sy;
        for (int x = 0; x < new_width; ++x) {
            const double x_lo = x * sx;
            const double x_hi = (x + 1) * sx;
            double acc = 0.0;
            double weight = 0.0;
            for (int yy = static_cast<int>(y_lo); yy < std::min<double>(y_hi, plane.height()); ++yy) {
                const double wy = std::min<double>(yy + 1, y_hi) - std::max<double>(yy, y_lo);
                if (wy <= 0.0) continue;
                for (int xx = static_cast<int>(x_lo); xx < std::min<double>(x_hi, plane.width()); ++xx) {
                    const double wx = std::min<double>(xx + 1, x_hi) - std::max<double>(xx, x_lo);
                    if (wx <= 0.0) continue;
                    acc += wx * wy * plane.at(xx, yy);
                    weight += wx * wy;
                }
            }
            out.at(x, y) = weight > 0.0 ? acc / weight : 0.0;
        }
    }
    return out;
}

RasterImage ensure_rgb(const RasterImage& img) {
    if (img.channels() == 3) return img;
    RasterImage out(img.width(), img.height(), 3);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const auto v = img.at(x, y, 0);
            out.at(x, y, 0) = v;
            out.at(x, y, 1) = v;
            out.at(x, y, 2) = v;
        }
    }
    return out;
}

RasterImage paint_mask(const RasterImage& img, const BinaryMask& mask, Rgb color) {
    if (img.width() != mask.width() || img.height() != mask.height()) {
        throw InvalidInput("paint_mask: dimension mismatch");
    }
    RasterImage out = ensure_rgb(img);
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
            if (!mask.at(x, y)) continue;
            out.at(x, y, 0) = color.r;
            out.at(x, y, 1) = color.g;
            out.at(x, y, 2) = color.b;
        }
    }
    return out;
}

RasterImage resize_image(const RasterImage& img, int new_width, int new_height) {
    RasterImage out(new_width, new_height, img.channels());
    for (int c = 0; c < img.channels(); ++c) {
        FloatPlane plane(img.width(), img.height());
        for (int y = 0; y < img.height(); ++y) {
            for (int x = 0; x < img.width(); ++x) plane.at(x, y) = img.at(x, y, c);
        }
        const FloatPlane r = resize_plane(plane, new_width, new_height);
        for (int y = 0; y < new_height; ++y) {
            for (int x = 0; x < new_width; ++x) {
                out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(r.at(x, y)), 0L, 255L));
            }
        }
    }
    return out;
}

RasterImage limit_size(const RasterImage& img, int max_side) {
    const int longer = std::max(img.width(), img.height());
    if (max_side <= 0 || longer <= max_side) return img;
    const double scale = static_cast<double>(max_side) / longer;
    const int w = std::max(1, static_cast<int>(std::lround(img.width() * scale)));
    const int h = std::max(1, static_cast<int>(std::lround(img.height() * scale)));
    return resize_image(img, w, h);
}

}  // namespace lesionkit::imaging
