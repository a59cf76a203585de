#include "lesionkit/pipeline.hpp"

#include <cmath>
#include <numbers>

#include "lesionkit/geometry.hpp"
#include "lesionkit/imaging.hpp"

namespace lesionkit::pipeline {

providers::SegmenterFn chan_vese_segmenter(const segmentation::SegmentationConfig& config) {
    return [config](const RasterImage& img) { return segmentation::segment_lesion(img, config).mask; };
}

providers::ClassifierFn linear_classifier(std::shared_ptr<const classify::LinearModel> model,
                                          providers::SegmenterFn segmenter, abcd::AbcdConfig abcd_config) {
    if (!model) throw InvalidParameter("linear classifier needs a model");
    return [model, segmenter = std::move(segmenter), abcd_config](const RasterImage& img) {
        const BinaryMask mask = segmenter(img);
        const auto f = abcd::extract(img, mask, abcd_config);
        return classify::predict(*model, f);
    };
}

providers::ClassifierFn uniform_on_no_lesion(providers::ClassifierFn inner, std::size_t n_classes) {
    return [inner = std::move(inner), n_classes](const RasterImage& img) {
        try {
            return inner(img);
        } catch (const segmentation::DegenerateSegmentation&) {
        } catch (const NoLesion&) {
        }
        return classify::Prediction{std::vector<double>(n_classes, 1.0 / static_cast<double>(n_classes))};
    };
}

providers::FeatureMaskFn heuristic_feature_masks(providers::FeatureBands bands) {
    return [bands = std::move(bands)](const RasterImage& img, const BinaryMask& lesion, providers::FeatureClass cls) {
        return providers::heuristic_feature_mask(img, lesion, cls, bands);
    };
}

FeatureAnalysis analyze_features(const RasterImage& img, const BinaryMask& mask, const abcd::AbcdConfig& config) {
    FeatureAnalysis out;
    out.mask = mask;
    out.features = abcd::extract(img, mask, config);
    out.scores = abcd::project_scores(out.features, config.projection);
    return out;
}

RasterImage render_segmentation_layer(const RasterImage& img, const BinaryMask& mask) {
    return imaging::paint_mask(img, mask, kSegmentationColor);
}

RasterImage render_color_layer(const RasterImage& img, const BinaryMask& mask, const abcd::ColorTable& table) {
    RasterImage out = imaging::ensure_rgb(img);
    for (const auto& [color, region] : abcd::color_region_masks(img, mask, table)) {
        out = imaging::paint_mask(out, region, abcd::marker_color(color));
    }
    return out;
}

namespace {

void plot(RasterImage& img, int x, int y, imaging::Rgb c) {
    if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) return;
    img.at(x, y, 0) = c.r;
    img.at(x, y, 1) = c.g;
    img.at(x, y, 2) = c.b;
}

void draw_line(RasterImage& img, geometry::Point a, geometry::Point b, imaging::Rgb c) {
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const int steps = std::max(1, static_cast<int>(std::ceil(len * 2)));
    for (int i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) / steps;
        plot(img, static_cast<int>(std::floor(a.x + (b.x - a.x) * t)), static_cast<int>(std::floor(a.y + (b.y - a.y) * t)),
             c);
    }
}

}  // namespace

RasterImage render_asymmetry_layer(const RasterImage& img, const BinaryMask& mask, const abcd::AbcdFeatures& f) {
    RasterImage out = imaging::ensure_rgb(img);
    for (const auto& p : geometry::trace_contour(mask)) plot(out, static_cast<int>(p.x), static_cast<int>(p.y), kSegmentationColor);
    const double rad = f.tilt_deg * std::numbers::pi / 180.0;
    const double ux = std::cos(rad), uy = std::sin(rad);
    const geometry::Point c{f.centroid.x + 0.5, f.centroid.y + 0.5};
    const double r = f.rect_major_px / 2.0;
    draw_line(out, {c.x - ux * r, c.y - uy * r}, {c.x + ux * r, c.y + uy * r}, kAxisColor);
    draw_line(out, {c.x + uy * r, c.y - ux * r}, {c.x - uy * r, c.y + ux * r}, kAxisColor);
    return out;
}

}  // namespace lesionkit::pipeline
