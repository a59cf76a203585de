#include "lesionkit/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace lesionkit::geometry {

namespace {

constexpr double kPi = 3.14159265358979323846;

double cross(const Point& o, const Point& a, const Point& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double dot(const Point& a, const Point& b) { return a.x * b.x + a.y * b.y; }

Point sub(const Point& a, const Point& b) { return {a.x - b.x, a.y - b.y}; }

}  // namespace

std::vector<Point> convex_hull(std::vector<Point> pts) {
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Point& a, const Point& b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    if (pts.size() < 3) return pts;

    std::vector<Point> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

RotatedRect min_area_rect(const std::vector<Point>& hull) {
    RotatedRect best;
    const std::size_t n = hull.size();
    if (n == 0) return best;
    if (n == 1) {
        best.center = hull[0];
        return best;
    }
    if (n == 2) {
        const Point d = sub(hull[1], hull[0]);
        best.center = {(hull[0].x + hull[1].x) / 2, (hull[0].y + hull[1].y) / 2};
        best.width = std::hypot(d.x, d.y);
        best.angle_deg = std::atan2(d.y, d.x) * 180.0 / kPi;
    } else {
        constexpr double eps = 1e-12;
        auto next = [n](std::size_t i) { return (i + 1) % n; };
        std::size_t right = 0, top = 0, left = 0;
        double best_area = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const Point edge = sub(hull[next(i)], hull[i]);
            const double len = std::hypot(edge.x, edge.y);
            if (len <= 0.0) continue;
            const Point e{edge.x / len, edge.y / len};
            const Point nv{-e.y, e.x};  // points into the hull

            if (i == 0) right = 0;
            while (dot(sub(hull[next(right)], hull[right]), e) > eps) right = next(right);
            if (i == 0) top = right;
            while (dot(sub(hull[next(top)], hull[top]), nv) > eps) top = next(top);
            if (i == 0) left = top;
            while (dot(sub(hull[next(left)], hull[left]), e) < -eps) left = next(left);

            const double lo = dot(sub(hull[left], hull[i]), e);
            const double hi = dot(sub(hull[right], hull[i]), e);
            const double height = dot(sub(hull[top], hull[i]), nv);
            const double width = hi - lo;
            const double area = width * height;
            if (best_area < 0.0 || area < best_area * (1.0 - 1e-12)) {
                best_area = area;
                const double mid = (lo + hi) / 2.0;
                best.center = {hull[i].x + e.x * mid + nv.x * height / 2.0,
                               hull[i].y + e.y * mid + nv.y * height / 2.0};
                best.width = width;
                best.height = height;
                best.angle_deg = std::atan2(e.y, e.x) * 180.0 / kPi;
            }
        }
    }
    while (best.angle_deg >= 45.0) {
        best.angle_deg -= 90.0;
        std::swap(best.width, best.height);
    }
    while (best.angle_deg < -45.0) {
        best.angle_deg += 90.0;
        std::swap(best.width, best.height);
    }
    return best;
}

std::vector<Point> mask_hull_points(const BinaryMask& mask) {
    std::vector<Point> pts;
    for (int y = 0; y < mask.height(); ++y) {
        int first = -1, last = -1;
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.at(x, y)) continue;
            if (first < 0) first = x;
            last = x;
        }
        if (first < 0) continue;
        for (int x : {first, last + 1}) {
            pts.push_back({static_cast<double>(x), static_cast<double>(y)});
            pts.push_back({static_cast<double>(x), static_cast<double>(y + 1)});
        }
    }
    return pts;
}

RotatedRect mask_min_area_rect(const BinaryMask& mask) {
    return min_area_rect(convex_hull(mask_hull_points(mask)));
}

std::vector<Point> trace_contour(const BinaryMask& mask) {
    // Clockwise (on screen) Moore-neighbor tracing; directions start East.
    static constexpr int dx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
    static constexpr int dy[8] = {0, 1, 1, 1, 0, -1, -1, -1};

    int sx = -1, sy = -1;
    for (int y = 0; y < mask.height() && sx < 0; ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (mask.at(x, y)) {
                sx = x;
                sy = y;
                break;
            }
        }
    }
    std::vector<Point> contour;
    if (sx < 0) return contour;

    auto find_next = [&](int x, int y, int dir, int& nx, int& ny, int& ndir) {
        const int start = (dir % 2 == 0) ? (dir + 7) % 8 : (dir + 6) % 8;
        for (int k = 0; k < 8; ++k) {
            const int d = (start + k) % 8;
            if (mask.get_or_false(x + dx[d], y + dy[d])) {
                nx = x + dx[d];
                ny = y + dy[d];
                ndir = d;
                return true;
            }
        }
        return false;
    };

    contour.push_back({static_cast<double>(sx), static_cast<double>(sy)});
    int x = sx, y = sy, dir = 7;
    int nx = 0, ny = 0, first_dir = 0;
    if (!find_next(x, y, dir, nx, ny, first_dir)) return contour;  // isolated pixel
    dir = first_dir;
    x = nx;
    y = ny;
    const std::size_t limit = 4 * static_cast<std::size_t>(mask.width()) * mask.height() + 8;
    while (contour.size() < limit) {
        int ndir = 0;
        find_next(x, y, dir, nx, ny, ndir);
        if (x == sx && y == sy && ndir == first_dir) break;
        contour.push_back({static_cast<double>(x), static_cast<double>(y)});
        x = nx;
        y = ny;
        dir = ndir;
    }
    return contour;
}

}  // namespace lesionkit::geometry
