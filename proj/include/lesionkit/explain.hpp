#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lesionkit/classify.hpp"
#include "lesionkit/image.hpp"

namespace lesionkit::explain {

inline constexpr int kDefaultMasks = 1000;
inline constexpr int kInteractiveMasks = 100;

struct RiseParams {
    int n_masks = kDefaultMasks;
    int grid_cells = 7;  // s, grid is s x s
    double p_on = 0.5;
    std::size_t target_class = 1;
    std::uint64_t seed = 42;
    int threads = 1;  // results do not depend on this

    void validate() const;
    bool operator==(const RiseParams&) const = default;
};

struct SaliencyMap {
    FloatPlane values;           // normalized to [0, 1]
    FloatPlane raw_accumulator;  // sum f_c(img * M_i) M_i / sum M_i, per pixel
    RiseParams params_used;
};

/// Must be safe to call concurrently when params.threads > 1.
using Classifier = std::function<classify::Prediction(const RasterImage&)>;

/// Deterministic random-phase occlusion masks; mask i depends only on (seed, i).
class MaskGenerator {
public:
    MaskGenerator(const RiseParams& params, int width, int height);

    FloatPlane mask(int index) const;

    int cell_width() const noexcept { return cell_w_; }
    int cell_height() const noexcept { return cell_h_; }

private:
    RiseParams params_;
    int width_;
    int height_;
    int cell_w_;
    int cell_h_;
};

std::vector<FloatPlane> generate_masks(const RiseParams& params, int width, int height);

/// img multiplied per pixel by the mask (toward black), rounded.
RasterImage apply_mask(const RasterImage& img, const FloatPlane& mask);

/// (raw - min) / (max - min), or zeros when the plane is flat to rounding.
FloatPlane normalize_saliency(const FloatPlane& raw);

/// Throws ExplanationAborted if the classifier throws or returns an unusable prediction.
SaliencyMap rise(const RasterImage& img, const Classifier& classifier, const RiseParams& params = {});

RasterImage render_explanation(const RasterImage& img, const SaliencyMap& map, double opacity);

}  // namespace lesionkit::explain
