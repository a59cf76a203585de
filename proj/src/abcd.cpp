#include "lesionkit/abcd.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lesionkit/segmentation.hpp"

namespace lesionkit::abcd {

namespace {

constexpr double kPi = 3.14159265358979323846;

double clamp10(double v) { return std::clamp(v, 0.0, 10.0); }

double hue_distance(double a, double b) {
    const double d = std::fmod(std::abs(a - b), 360.0);
    return std::min(d, 360.0 - d);
}

double hue_center(const Range& r) {
    if (r.lo <= r.hi) return (r.lo + r.hi) / 2.0;
    const double span = (360.0 - r.lo) + r.hi;
    return std::fmod(r.lo + span / 2.0, 360.0);
}

Point mask_centroid(const BinaryMask& mask) {
    double sx = 0.0, sy = 0.0, n = 0.0;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.at(x, y)) continue;
            sx += x;
            sy += y;
            n += 1.0;
        }
    }
    if (n == 0.0) throw NoLesion("lesion mask is empty");
    return {sx / n, sy / n};
}

void require_same_grid(const RasterImage& img, const BinaryMask& mask) {
    if (img.width() != mask.width() || img.height() != mask.height()) {
        throw InvalidInput("image and mask dimensions differ");
    }
}

struct LabeledPixels {
    std::vector<int> label;  // color index per pixel, -1 outside the lesion
    std::vector<double> value;
};

LabeledPixels label_colors(const RasterImage& img, const BinaryMask& mask, const ColorTable& table) {
    const RasterImage rgb = imaging::ensure_rgb(img);
    LabeledPixels out;
    out.label.assign(static_cast<std::size_t>(img.width()) * img.height(), -1);
    out.value.assign(out.label.size(), 0.0);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            if (!mask.at(x, y)) continue;
            const auto hsv = imaging::rgb_to_hsv(rgb.at(x, y, 0), rgb.at(x, y, 1), rgb.at(x, y, 2));
            const std::size_t p = static_cast<std::size_t>(y) * img.width() + x;
            out.label[p] = static_cast<int>(classify_pixel(hsv, table));
            out.value[p] = hsv.v;
        }
    }
    return out;
}

struct RawRegion {
    LesionColor color;
    std::vector<int> pixels;
};

std::vector<RawRegion> kept_regions(const RasterImage& img, const BinaryMask& mask, const ColorTable& table,
                                    LabeledPixels& labels) {
    const std::size_t lesion_area = mask.count();
    if (lesion_area == 0) throw NoLesion("lesion mask is empty");
    labels = label_colors(img, mask, table);
    const int w = img.width();
    const int h = img.height();
    std::vector<std::uint8_t> seen(labels.label.size(), 0);
    std::vector<RawRegion> regions;
    std::vector<int> stack;
    const double min_area = table.min_area_fraction * static_cast<double>(lesion_area);
    for (std::size_t start = 0; start < labels.label.size(); ++start) {
        if (labels.label[start] < 0 || seen[start]) continue;
        const int color = labels.label[start];
        RawRegion region{static_cast<LesionColor>(color), {}};
        seen[start] = 1;
        stack.push_back(static_cast<int>(start));
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            region.pixels.push_back(p);
            const int px = p % w, py = p / w;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = px + dx, ny = py + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const std::size_t q = static_cast<std::size_t>(ny) * w + nx;
                    if (seen[q] || labels.label[q] != color) continue;
                    seen[q] = 1;
                    stack.push_back(static_cast<int>(q));
                }
            }
        }
        if (static_cast<double>(region.pixels.size()) >= min_area) regions.push_back(std::move(region));
    }
    std::stable_sort(regions.begin(), regions.end(), [](const RawRegion& a, const RawRegion& b) {
        if (a.color != b.color) return static_cast<int>(a.color) < static_cast<int>(b.color);
        return a.pixels.size() > b.pixels.size();
    });
    return regions;
}

Point weighted_centroid(const std::vector<int>& pixels, const std::vector<double>& weight, int width) {
    double sx = 0.0, sy = 0.0, sw = 0.0;
    for (int p : pixels) {
        const double wv = weight[static_cast<std::size_t>(p)];
        sx += wv * (p % width);
        sy += wv * (p / width);
        sw += wv;
    }
    if (sw > 0.0) return {sx / sw, sy / sw};
    // all-black pixels carry no brightness weight
    sx = sy = 0.0;
    for (int p : pixels) {
        sx += p % width;
        sy += p / width;
    }
    const double n = static_cast<double>(pixels.size());
    return {sx / n, sy / n};
}

}  // namespace

std::string_view color_name(LesionColor c) {
    switch (c) {
        case LesionColor::White: return "white";
        case LesionColor::Red: return "red";
        case LesionColor::LightBrown: return "light-brown";
        case LesionColor::DarkBrown: return "dark-brown";
        case LesionColor::BlueGray: return "blue-gray";
        case LesionColor::Black: return "black";
    }
    return "unknown";
}

std::optional<LesionColor> color_from_name(std::string_view name) {
    for (auto c : kAllColors) {
        if (color_name(c) == name) return c;
    }
    return std::nullopt;
}

imaging::Rgb marker_color(LesionColor c) {
    switch (c) {
        case LesionColor::White: return {255, 255, 255};
        case LesionColor::Red: return {255, 0, 255};
        case LesionColor::LightBrown: return {255, 255, 0};
        case LesionColor::DarkBrown: return {255, 0, 0};
        case LesionColor::BlueGray: return {0, 160, 255};
        case LesionColor::Black: return {0, 255, 0};
    }
    return {0, 0, 0};
}

bool ColorBox::contains(const imaging::Hsv& p) const {
    return (!hue || hue->contains(p.h)) && (!saturation || saturation->contains(p.s)) &&
           (!value || value->contains(p.v));
}

double ColorBox::center_distance(const imaging::Hsv& p) const {
    double d2 = 0.0;
    if (hue) {
        const double dh = hue_distance(p.h, hue_center(*hue)) / 180.0;
        d2 += dh * dh;
    }
    if (saturation) {
        const double ds = p.s - (saturation->lo + saturation->hi) / 2.0;
        d2 += ds * ds;
    }
    if (value) {
        const double dv = p.v - (value->lo + value->hi) / 2.0;
        d2 += dv * dv;
    }
    return std::sqrt(d2);
}

const ColorTable& default_color_table() {
    static const ColorTable table{
        {{
            {LesionColor::White, std::nullopt, Range{0.0, 0.15}, Range{0.8, 1.0}},
            {LesionColor::Red, Range{345.0, 15.0}, Range{0.4, 1.0}, Range{0.3, 1.0}},
            {LesionColor::LightBrown, Range{15.0, 50.0}, Range{0.2, 0.6}, Range{0.5, 0.9}},
            {LesionColor::DarkBrown, Range{15.0, 50.0}, Range{0.3, 1.0}, Range{0.2, 0.5}},
            {LesionColor::BlueGray, Range{180.0, 260.0}, Range{0.1, 0.5}, Range{0.3, 0.8}},
            {LesionColor::Black, std::nullopt, std::nullopt, Range{0.0, 0.2}},
        }},
        0.02,
    };
    return table;
}

LesionColor classify_pixel(const imaging::Hsv& p, const ColorTable& table) {
    for (const auto& box : table.boxes) {
        if (box.contains(p)) return box.color;
    }
    const ColorBox* nearest = &table.boxes[0];
    double best = nearest->center_distance(p);
    for (const auto& box : table.boxes) {
        const double d = box.center_distance(p);
        if (d < best) {
            best = d;
            nearest = &box;
        }
    }
    return nearest->color;
}

std::vector<ColorRegion> color_variegation(const RasterImage& img, const BinaryMask& mask, const ColorTable& table) {
    require_same_grid(img, mask);
    LabeledPixels labels;
    const auto raw = kept_regions(img, mask, table, labels);
    std::vector<ColorRegion> out;
    out.reserve(raw.size());
    for (const auto& r : raw) {
        out.push_back({r.color, r.pixels.size(), weighted_centroid(r.pixels, labels.value, img.width())});
    }
    return out;
}

std::vector<std::pair<LesionColor, BinaryMask>> color_region_masks(const RasterImage& img, const BinaryMask& mask,
                                                                   const ColorTable& table) {
    require_same_grid(img, mask);
    LabeledPixels labels;
    const auto raw = kept_regions(img, mask, table, labels);
    std::vector<std::pair<LesionColor, BinaryMask>> out;
    for (const auto& r : raw) {
        auto it = std::find_if(out.begin(), out.end(), [&](const auto& e) { return e.first == r.color; });
        if (it == out.end()) {
            out.emplace_back(r.color, BinaryMask(img.width(), img.height()));
            it = out.end() - 1;
        }
        for (int p : r.pixels) it->second.set(p % img.width(), p / img.width(), true);
    }
    return out;
}

AlignedLesion align(const RasterImage& img, const BinaryMask& mask) {
    require_same_grid(img, mask);
    if (!mask.any()) throw NoLesion("lesion mask is empty");

    AlignedLesion out;
    out.centroid = mask_centroid(mask);
    out.rect = geometry::mask_min_area_rect(mask);
    out.tilt_deg = out.rect.angle_deg;
    out.rect_major = std::max(out.rect.width, out.rect.height);
    out.rect_minor = std::min(out.rect.width, out.rect.height);

    constexpr int pad = 2;
    const int cw = static_cast<int>(std::ceil(out.rect.width)) + 2 * pad;
    const int ch = static_cast<int>(std::ceil(out.rect.height)) + 2 * pad;
    const double t = out.tilt_deg * kPi / 180.0;
    const double c = std::cos(t), s = std::sin(t);

    const RasterImage rgb = imaging::ensure_rgb(img);
    out.mask = BinaryMask(cw, ch);
    out.image = RasterImage(cw, ch, 3);
    for (int v = 0; v < ch; ++v) {
        for (int u = 0; u < cw; ++u) {
            const double du = u + 0.5 - cw / 2.0;
            const double dv = v + 0.5 - ch / 2.0;
            const double sx = out.rect.center.x + du * c - dv * s;
            const double sy = out.rect.center.y + du * s + dv * c;
            out.mask.set(u, v, mask.get_or_false(static_cast<int>(std::floor(sx)), static_cast<int>(std::floor(sy))));

            const double fx = sx - 0.5, fy = sy - 0.5;
            const int x0 = static_cast<int>(std::floor(fx)), y0 = static_cast<int>(std::floor(fy));
            const double tx = fx - x0, ty = fy - y0;
            for (int k = 0; k < 3; ++k) {
                auto sample = [&](int x, int y) -> double {
                    x = std::clamp(x, 0, rgb.width() - 1);
                    y = std::clamp(y, 0, rgb.height() - 1);
                    return rgb.at(x, y, k);
                };
                const double top = sample(x0, y0) * (1 - tx) + sample(x0 + 1, y0) * tx;
                const double bot = sample(x0, y0 + 1) * (1 - tx) + sample(x0 + 1, y0 + 1) * tx;
                out.image.at(u, v, k) = static_cast<std::uint8_t>(std::clamp(std::lround(top * (1 - ty) + bot * ty), 0L, 255L));
            }
        }
    }
    return out;
}

Asymmetry asymmetry(const AlignedLesion& lesion, std::span<const ColorRegion> regions) {
    const BinaryMask& m = lesion.mask;
    const Point c = mask_centroid(m);
    const double area = static_cast<double>(m.count());

    // Pixels are unit squares; a reflected square straddles two grid cells and
    // the overlap with M is split by the fractional offset. |M xor F(M)| = 2 (A - |M n F(M)|).
    auto overlap = [&](double mirrored, auto&& at) {
        const double k = std::floor(mirrored);
        const double f = mirrored - k;
        const int i = static_cast<int>(k);
        return (1.0 - f) * (at(i) ? 1.0 : 0.0) + f * (at(i + 1) ? 1.0 : 0.0);
    };
    double kept_v = 0.0, kept_h = 0.0;
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            if (!m.at(x, y)) continue;
            kept_v += overlap(2.0 * c.y - y, [&](int yy) { return m.get_or_false(x, yy); });
            kept_h += overlap(2.0 * c.x - x, [&](int xx) { return m.get_or_false(xx, y); });
        }
    }
    const double miss_v = std::max(0.0, area - kept_v);
    const double miss_h = std::max(0.0, area - kept_h);
    Asymmetry out;
    out.vertical_pct = std::min(100.0, 100.0 * 2.0 * miss_v / area);
    out.horizontal_pct = std::min(100.0, 100.0 * 2.0 * miss_h / area);

    for (auto color : kAllColors) {
        double sx = 0.0, sy = 0.0, sa = 0.0;
        for (const auto& r : regions) {
            if (r.color != color) continue;
            sx += r.weighted_centroid.x * static_cast<double>(r.area);
            sy += r.weighted_centroid.y * static_cast<double>(r.area);
            sa += static_cast<double>(r.area);
        }
        if (sa == 0.0) continue;
        out.centroid_distances[static_cast<std::size_t>(color)] =
            std::hypot(sx / sa - lesion.centroid.x, sy / sa - lesion.centroid.y);
    }
    return out;
}

double chain_length(const std::vector<Point>& contour) {
    const std::size_t n = contour.size();
    if (n < 2) return 0.0;
    double len = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = contour[i];
        const auto& b = contour[(i + 1) % n];
        len += std::hypot(b.x - a.x, b.y - a.y);
    }
    return len;
}

std::size_t chord_span(std::size_t contour_points) {
    const auto scaled = static_cast<std::size_t>(std::lround(static_cast<double>(contour_points) / kChordSpanDivisor));
    return std::min(contour_points, std::max<std::size_t>(kMinChordSpan, scaled));
}

double perimeter(const BinaryMask& mask) {
    const auto contour = geometry::trace_contour(mask);
    const std::size_t n = contour.size();
    if (n == 0) throw NoLesion("lesion mask is empty");
    const std::size_t span = chord_span(n);
    double chords = 0.0;
    for (std::size_t i = 0; i < n && span > 0; ++i) {
        const auto& a = contour[i];
        const auto& b = contour[(i + span) % n];
        chords += std::hypot(b.x - a.x, b.y - a.y);
    }
    return chords / static_cast<double>(span) + kPi;
}

double border_irregularity(const BinaryMask& mask) {
    if (!mask.any()) throw NoLesion("lesion mask is empty");
    const BinaryMask lesion = segmentation::largest_component(mask);
    const double p = perimeter(lesion);
    const double a = static_cast<double>(lesion.count());
    return std::max(1.0, p * p / (4.0 * kPi * a));
}

Diameters diameters(const AlignedLesion& lesion, double mm_per_pixel) {
    if (!(mm_per_pixel > 0.0) || !std::isfinite(mm_per_pixel)) {
        throw InvalidParameter("mm_per_pixel must be > 0");
    }
    return {lesion.rect_major * mm_per_pixel, lesion.rect_minor * mm_per_pixel};
}

std::array<double, 8> AbcdFeatures::asymmetry_parameters() const {
    std::array<double, 8> out{};
    out[0] = asym_vertical_pct;
    out[1] = asym_horizontal_pct;
    std::copy(centroid_distances.begin(), centroid_distances.end(), out.begin() + 2);
    return out;
}

DisplayScores project_scores(const AbcdFeatures& f, const ProjectionConstants& k) {
    DisplayScores s;
    s.a1 = clamp10(f.asym_horizontal_pct / k.asymmetry_divisor);
    s.a2 = clamp10(f.asym_vertical_pct / k.asymmetry_divisor);
    s.b = clamp10((f.irregularity_index - 1.0) * k.border_gain);
    s.d1 = clamp10(f.diameter_h_mm * 10.0 / k.diameter_full_scale_mm);
    s.d2 = clamp10(f.diameter_v_mm * 10.0 / k.diameter_full_scale_mm);
    return s;
}

AbcdFeatures extract(const RasterImage& img, const BinaryMask& mask, const AbcdConfig& config) {
    require_same_grid(img, mask);
    const AlignedLesion lesion = align(img, mask);
    AbcdFeatures f;
    f.color_regions = color_variegation(img, mask, config.colors);
    const Asymmetry a = asymmetry(lesion, f.color_regions);
    f.asym_vertical_pct = a.vertical_pct;
    f.asym_horizontal_pct = a.horizontal_pct;
    f.centroid_distances = a.centroid_distances;
    f.irregularity_index = border_irregularity(mask);
    const Diameters d = diameters(lesion, config.mm_per_pixel);
    f.diameter_h_mm = d.horizontal_mm;
    f.diameter_v_mm = d.vertical_mm;
    for (auto color : kAllColors) {
        const bool present = std::any_of(f.color_regions.begin(), f.color_regions.end(),
                                         [&](const ColorRegion& r) { return r.color == color; });
        if (present) f.colors_present.push_back(color);
    }
    f.rect_major_px = lesion.rect_major;
    f.rect_minor_px = lesion.rect_minor;
    f.tilt_deg = lesion.tilt_deg;
    f.mm_per_pixel = config.mm_per_pixel;
    f.centroid = lesion.centroid;
    return f;
}

}  // namespace lesionkit::abcd
