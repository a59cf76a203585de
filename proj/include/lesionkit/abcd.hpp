#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lesionkit/geometry.hpp"
#include "lesionkit/image.hpp"
#include "lesionkit/imaging.hpp"

namespace lesionkit::abcd {

using geometry::Point;

enum class LesionColor { White = 0, Red, LightBrown, DarkBrown, BlueGray, Black };

inline constexpr std::array<LesionColor, 6> kAllColors{LesionColor::White,    LesionColor::Red,
                                                       LesionColor::LightBrown, LesionColor::DarkBrown,
                                                       LesionColor::BlueGray, LesionColor::Black};

std::string_view color_name(LesionColor c);
std::optional<LesionColor> color_from_name(std::string_view name);
/// Marker used when painting regions of this color in overlays.
imaging::Rgb marker_color(LesionColor c);

struct AlignedLesion {
    BinaryMask mask;     // rotated upright
    RasterImage image;   // same rotation, bilinear
    double tilt_deg = 0.0;
    double rect_major = 0.0;
    double rect_minor = 0.0;
    Point centroid;      // of the source mask, source pixel coordinates
    geometry::RotatedRect rect;  // in source coordinates
};

/// Rotates image and mask by -tilt about the center of the mask's minimum-area
/// rectangle so that the rectangle becomes axis-aligned.
AlignedLesion align(const RasterImage& img, const BinaryMask& mask);

/// Closed interval; `lo > hi` denotes a hue range wrapping through 0.
struct Range {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double v) const { return lo <= hi ? (v >= lo && v <= hi) : (v >= lo || v <= hi); }
};

struct ColorBox {
    LesionColor color = LesionColor::White;
    std::optional<Range> hue;  // degrees
    std::optional<Range> saturation;
    std::optional<Range> value;

    bool contains(const imaging::Hsv& p) const;
    /// Distance to the box center over the constrained dimensions; hue is
    /// measured circularly and scaled by 1/180.
    double center_distance(const imaging::Hsv& p) const;
};

struct ColorTable {
    std::array<ColorBox, 6> boxes;
    double min_area_fraction = 0.02;
};

const ColorTable& default_color_table();

/// First matching box in table order, otherwise the box with the nearest center.
LesionColor classify_pixel(const imaging::Hsv& p, const ColorTable& table = default_color_table());

struct ColorRegion {
    LesionColor color = LesionColor::White;
    std::size_t area = 0;       // pixels
    Point weighted_centroid;    // V-weighted
};

/// 8-connected single-color regions inside the lesion, speckle below
/// `min_area_fraction` of the lesion area removed. Sorted by color, then area.
std::vector<ColorRegion> color_variegation(const RasterImage& img, const BinaryMask& mask,
                                           const ColorTable& table = default_color_table());

/// Per-color label map of the kept regions (for overlay rendering).
std::vector<std::pair<LesionColor, BinaryMask>> color_region_masks(const RasterImage& img, const BinaryMask& mask,
                                                                   const ColorTable& table = default_color_table());

struct Asymmetry {
    double vertical_pct = 0.0;    // mirror about the horizontal centroid axis
    double horizontal_pct = 0.0;  // mirror about the vertical centroid axis
    std::array<double, 6> centroid_distances{};  // indexed by LesionColor, 0 when absent
};

Asymmetry asymmetry(const AlignedLesion& lesion, std::span<const ColorRegion> regions);

/// Contour length with unit axial and sqrt(2) diagonal steps.
double chain_length(const std::vector<Point>& contour);

/// Perimeter estimate used by the irregularity index: mean chord length over
/// windows of `chord_span(n)` steps of the traced contour (n points), plus the
/// half-pixel outward offset (pi) from pixel centers to the pixel boundary.
/// The window grows with the contour so the estimate is scale-stable.
double perimeter(const BinaryMask& mask);
inline constexpr std::size_t kMinChordSpan = 3;
inline constexpr double kChordSpanDivisor = 64.0;
std::size_t chord_span(std::size_t contour_points);

/// P^2 / (4 pi A), A = foreground pixel count; floored at 1.
double border_irregularity(const BinaryMask& mask);

struct Diameters {
    double horizontal_mm = 0.0;
    double vertical_mm = 0.0;
};

Diameters diameters(const AlignedLesion& lesion, double mm_per_pixel);

struct AbcdFeatures {
    double asym_vertical_pct = 0.0;
    double asym_horizontal_pct = 0.0;
    std::array<double, 6> centroid_distances{};
    double irregularity_index = 1.0;
    double diameter_h_mm = 0.0;
    double diameter_v_mm = 0.0;
    std::vector<LesionColor> colors_present;
    std::vector<ColorRegion> color_regions;

    // geometry kept for featurization and reporting
    double rect_major_px = 0.0;
    double rect_minor_px = 0.0;
    double tilt_deg = 0.0;
    double mm_per_pixel = 0.0;
    Point centroid;

    /// The eight asymmetry parameters: two overlap scores, six distances.
    std::array<double, 8> asymmetry_parameters() const;
};

struct DisplayScores {
    double a1 = 0.0;  // horizontal asymmetry
    double a2 = 0.0;  // vertical asymmetry
    double b = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

struct ProjectionConstants {
    double asymmetry_divisor = 10.0;   // percent -> score
    double border_gain = 5.0;          // (I - 1) * gain
    double diameter_full_scale_mm = 12.0;  // mm mapping to 10; 6 mm -> 5
};

DisplayScores project_scores(const AbcdFeatures& f, const ProjectionConstants& k = {});

inline constexpr double kDefaultMmPerPixel = 0.033;

struct AbcdConfig {
    ColorTable colors = default_color_table();
    ProjectionConstants projection;
    double mm_per_pixel = kDefaultMmPerPixel;
};

/// Full feature extraction from an image and its lesion mask.
AbcdFeatures extract(const RasterImage& img, const BinaryMask& mask, const AbcdConfig& config = {});

}  // namespace lesionkit::abcd
