#include "lesionkit/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lesionkit {

namespace {

void check_dims(int width, int height) {
    if (width < 1 || height < 1) {
        throw InvalidInput("image dimensions must be positive, got " + std::to_string(width) + "x" +
                           std::to_string(height));
    }
}

}  // namespace

RasterImage::RasterImage(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels) {
    check_dims(width, height);
    if (channels != 1 && channels != 3) {
        throw InvalidInput("images must have 1 or 3 channels, got " + std::to_string(channels));
    }
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

RasterImage::RasterImage(int width, int height, int channels, std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    check_dims(width, height);
    if (channels != 1 && channels != 3) {
        throw InvalidInput("images must have 1 or 3 channels, got " + std::to_string(channels));
    }
    if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
        throw InvalidInput("image buffer size does not match dimensions");
    }
}

BinaryMask::BinaryMask(int width, int height, bool fill) : width_(width), height_(height) {
    check_dims(width, height);
    bits_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

std::size_t BinaryMask::count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

FloatPlane::FloatPlane(int width, int height, double fill) : width_(width), height_(height) {
    check_dims(width, height);
    values_.assign(static_cast<std::size_t>(width) * height, fill);
}

bool FloatPlane::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double FloatPlane::min() const {
    if (values_.empty()) throw InvalidInput("empty plane");
    return *std::min_element(values_.begin(), values_.end());
}

double FloatPlane::max() const {
    if (values_.empty()) throw InvalidInput("empty plane");
    return *std::max_element(values_.begin(), values_.end());
}

RasterImage mask_to_image(const BinaryMask& mask) {
    RasterImage out(mask.width(), mask.height(), 1);
    auto dst = out.data();
    auto src = mask.bits();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] ? 255 : 0;
    return out;
}

BinaryMask image_to_mask(const RasterImage& img) {
    BinaryMask out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            bool on = false;
            for (int c = 0; c < img.channels(); ++c) on = on || img.at(x, y, c) != 0;
            out.set(x, y, on);
        }
    }
    return out;
}

}  // namespace lesionkit
