#pragma once

#include <vector>

#include "lesionkit/image.hpp"

namespace lesionkit::segmentation {

/// Raised when the contour collapses onto an empty or full-frame region, or
/// the input has no two-phase structure at all. Carries the offending mask.
class DegenerateSegmentation : public Error {
public:
    DegenerateSegmentation(const std::string& what, BinaryMask mask)
        : Error(what), mask_(std::move(mask)) {}
    const BinaryMask& mask() const noexcept { return mask_; }

private:
    BinaryMask mask_;
};

struct PreprocessParams {
    int kernel_size = 5;
    double sigma = 1.0;
    /// Images whose longer side exceeds this are downscaled first; 0 disables.
    int working_max_side = 512;
};

struct PreprocessResult {
    FloatPlane plane;         // smoothed luminance at working resolution
    PreprocessParams params;  // parameters actually applied
    int source_width = 0;
    int source_height = 0;
    double scale = 1.0;       // working / source
};

/// Y' extraction, optional downscale, Gaussian smoothing.
PreprocessResult preprocess(const RasterImage& img, const PreprocessParams& params = {});

/// Two-phase Chan-Vese weights. The length weight `mu` is relative to the
/// squared intensity range of the plane, which is normalized to [0,1] before
/// evolution.
struct CVParams {
    double lambda_inside = 1.0;
    double lambda_outside = 1.0;
    double mu = 0.1;
    int max_iters = 500;
    double margin_fraction = 0.1;

    void validate() const;
};

/// Level-set state of the two-list scheme. phi takes the values -3 (interior),
/// -1 (inner boundary), +1 (outer boundary) and +3 (exterior) during evolution;
/// `shrink_initialize` fills it with a true signed distance instead.
struct LevelSetState {
    FloatPlane phi;
    double inside_mean = 0.0;
    double outside_mean = 0.0;
    int iteration = 0;

    BinaryMask inside() const;
};

struct SegmentationResult {
    BinaryMask mask;  // darker of the two phases
    int iterations_used = 0;
    bool converged = false;
    std::vector<double> energy_trace;  // energy after initialization, then after every sweep
    LevelSetState state;
};

/// Signed distance to a centered circle of radius min(w,h) * (0.5 - margin).
LevelSetState shrink_initialize(int width, int height, double margin_fraction);

/// (I - min) / (max - min). Throws DegenerateSegmentation on a constant plane.
FloatPlane normalize_intensity(const FloatPlane& plane);

/// mu * Length + l1 * SSE(inside) + l2 * SSE(outside) on an already
/// normalized plane. Length counts 4-neighbor pixel pairs with different labels.
double chan_vese_energy(const FloatPlane& normalized, const BinaryMask& inside, const CVParams& params);

/// Fast level-set Chan-Vese: boundary pixels flip phase whenever the exact
/// energy change of the flip is negative. Stops when a full sweep flips
/// nothing or after `max_iters` sweeps.
SegmentationResult chan_vese_segment(const FloatPlane& plane, const CVParams& params = {});

/// Intersection over union of two binary masks; both empty gives 1.
double jaccard(const BinaryMask& truth, const BinaryMask& pred);

/// Largest 8-connected foreground component.
BinaryMask largest_component(const BinaryMask& mask);
/// Fills background regions not 4-connected to the frame border.
BinaryMask fill_holes(const BinaryMask& mask);

struct LesionSegmentation {
    BinaryMask mask;  // source resolution, single filled component
    SegmentationResult working;
    PreprocessResult preprocessed;
};

struct SegmentationConfig {
    PreprocessParams preprocess;
    CVParams chan_vese;
};

/// preprocess -> chan_vese_segment -> largest component + hole filling -> upscale.
LesionSegmentation segment_lesion(const RasterImage& img, const SegmentationConfig& config = {});

}  // namespace lesionkit::segmentation
