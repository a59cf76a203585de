#pragma once

#include <memory>

#include "lesionkit/abcd.hpp"
#include "lesionkit/classify.hpp"
#include "lesionkit/providers.hpp"
#include "lesionkit/segmentation.hpp"

namespace lesionkit::pipeline {

inline constexpr const char* kChanVeseSegmenterId = "chan-vese";
inline constexpr const char* kHeuristicFeatureMaskId = "heuristic-dog";

providers::SegmenterFn chan_vese_segmenter(const segmentation::SegmentationConfig& config);

/// segment -> ABCD features -> linear model.
providers::ClassifierFn linear_classifier(std::shared_ptr<const classify::LinearModel> model,
                                          providers::SegmenterFn segmenter, abcd::AbcdConfig abcd_config);

/// Wraps a classifier so images it cannot analyze (no lesion found, degenerate
/// segmentation) score as the uniform distribution instead of failing.
providers::ClassifierFn uniform_on_no_lesion(providers::ClassifierFn inner, std::size_t n_classes);

providers::FeatureMaskFn heuristic_feature_masks(providers::FeatureBands bands);

struct FeatureAnalysis {
    BinaryMask mask;
    abcd::AbcdFeatures features;
    abcd::DisplayScores scores;
};

FeatureAnalysis analyze_features(const RasterImage& img, const BinaryMask& mask, const abcd::AbcdConfig& config);

inline constexpr imaging::Rgb kSegmentationColor{0, 200, 255};
inline constexpr imaging::Rgb kAxisColor{255, 255, 255};

/// Overlay layers at source resolution, meant to be blended over the image.
RasterImage render_segmentation_layer(const RasterImage& img, const BinaryMask& mask);
RasterImage render_color_layer(const RasterImage& img, const BinaryMask& mask, const abcd::ColorTable& table);
/// Lesion outline plus the two symmetry axes through the centroid.
RasterImage render_asymmetry_layer(const RasterImage& img, const BinaryMask& mask, const abcd::AbcdFeatures& f);

}  // namespace lesionkit::pipeline
