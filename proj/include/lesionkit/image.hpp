#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lesionkit/errors.hpp"

namespace lesionkit {

/// 8-bit image, row-major, channel-interleaved. Channels is 1 or 3.
class RasterImage {
public:
    RasterImage() = default;
    RasterImage(int width, int height, int channels, std::uint8_t fill = 0);
    RasterImage(int width, int height, int channels, std::vector<std::uint8_t> data);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    bool empty() const noexcept { return data_.empty(); }

    std::uint8_t& at(int x, int y, int c = 0) {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    std::uint8_t at(int x, int y, int c = 0) const {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }

    std::span<const std::uint8_t> data() const noexcept { return data_; }
    std::span<std::uint8_t> data() noexcept { return data_; }

    bool operator==(const RasterImage&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<std::uint8_t> data_;
};

/// One boolean per pixel on the grid of the image it annotates.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height, bool fill = false);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    bool at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
    void set(int x, int y, bool v) { bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }

    /// Out-of-frame samples read as background.
    bool get_or_false(int x, int y) const {
        return x >= 0 && y >= 0 && x < width_ && y < height_ && at(x, y);
    }

    std::size_t count() const noexcept;
    bool any() const noexcept { return count() > 0; }

    std::span<const std::uint8_t> bits() const noexcept { return bits_; }

    bool operator==(const BinaryMask&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// Real-valued plane used for intermediate results.
class FloatPlane {
public:
    FloatPlane() = default;
    FloatPlane(int width, int height, double fill = 0.0);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    double& at(int x, int y) { return values_[static_cast<std::size_t>(y) * width_ + x]; }
    double at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    bool all_finite() const noexcept;
    double min() const;
    double max() const;

    bool operator==(const FloatPlane&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> values_;
};

/// Mask to 1-channel image (background 0, foreground 255).
RasterImage mask_to_image(const BinaryMask& mask);
/// Any nonzero sample becomes foreground.
BinaryMask image_to_mask(const RasterImage& img);

}  // namespace lesionkit
