#pragma once

#include <vector>

#include "lesionkit/image.hpp"

namespace lesionkit::geometry {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Oriented rectangle. `width` is the side along `angle_deg`, measured in image
/// coordinates (x right, y down), normalized to [-45, 45).
struct RotatedRect {
    Point center;
    double width = 0.0;
    double height = 0.0;
    double angle_deg = 0.0;

    double area() const { return width * height; }
};

/// Andrew's monotone chain; counter-clockwise in a y-up frame, no collinear points.
std::vector<Point> convex_hull(std::vector<Point> points);

/// Minimum-area enclosing rectangle of a convex polygon by rotating calipers.
RotatedRect min_area_rect(const std::vector<Point>& hull);

/// Pixel-corner points sufficient to span the hull of every foreground pixel
/// (the unit squares [x, x+1] x [y, y+1]).
std::vector<Point> mask_hull_points(const BinaryMask& mask);

/// Minimum-area rectangle of the foreground pixel squares.
RotatedRect mask_min_area_rect(const BinaryMask& mask);

/// Outer boundary of the component containing the first foreground pixel in
/// raster order, as an 8-connected closed chain of pixel coordinates.
std::vector<Point> trace_contour(const BinaryMask& mask);

}  // namespace lesionkit::geometry
