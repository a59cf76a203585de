#include "lesionkit/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "lesionkit/imaging.hpp"

namespace lesionkit::segmentation {

namespace {

constexpr double kFlipTolerance = 1e-12;

constexpr int kDx4[4] = {1, -1, 0, 0};
constexpr int kDy4[4] = {0, 0, 1, -1};

struct RegionStats {
    double n = 0.0;
    double sum = 0.0;
    double mean() const { return n > 0.0 ? sum / n : 0.0; }
};

}  // namespace

void CVParams::validate() const {
    if (max_iters < 1) throw InvalidParameter("chan-vese: max_iters must be >= 1");
    if (!(lambda_inside > 0.0) || !(lambda_outside > 0.0)) {
        throw InvalidParameter("chan-vese: lambda weights must be > 0");
    }
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw InvalidParameter("chan-vese: mu must be >= 0");
    if (!(margin_fraction > 0.0 && margin_fraction < 0.5)) {
        throw InvalidParameter("chan-vese: margin_fraction must lie in (0, 0.5)");
    }
}

BinaryMask LevelSetState::inside() const {
    BinaryMask out(phi.width(), phi.height());
    for (int y = 0; y < phi.height(); ++y) {
        for (int x = 0; x < phi.width(); ++x) out.set(x, y, phi.at(x, y) < 0.0);
    }
    return out;
}

PreprocessResult preprocess(const RasterImage& img, const PreprocessParams& params) {
    const RasterImage rgb = imaging::ensure_rgb(img);
    FloatPlane luma = imaging::rgb_to_yuv(rgb).y;
    PreprocessResult out;
    out.params = params;
    out.source_width = img.width();
    out.source_height = img.height();
    const int longest = std::max(img.width(), img.height());
    if (params.working_max_side > 0 && longest > params.working_max_side) {
        out.scale = static_cast<double>(params.working_max_side) / longest;
        const int w = std::max(1, static_cast<int>(std::lround(img.width() * out.scale)));
        const int h = std::max(1, static_cast<int>(std::lround(img.height() * out.scale)));
        luma = imaging::resize_plane(luma, w, h);
    }
    out.plane = imaging::gaussian_filter(luma, params.kernel_size, params.sigma);
    return out;
}

LevelSetState shrink_initialize(int width, int height, double margin_fraction) {
    if (!(margin_fraction > 0.0 && margin_fraction < 0.5)) {
        throw InvalidParameter("shrink_initialize: margin_fraction must lie in (0, 0.5)");
    }
    LevelSetState state;
    state.phi = FloatPlane(width, height);
    const double cx = width / 2.0;
    const double cy = height / 2.0;
    const double radius = std::min(width, height) * (0.5 - margin_fraction);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            state.phi.at(x, y) = std::hypot(x - cx, y - cy) - radius;
        }
    }
    return state;
}

FloatPlane normalize_intensity(const FloatPlane& plane) {
    if (!plane.all_finite()) throw InvalidInput("chan-vese: plane contains non-finite values");
    const double lo = plane.min();
    const double hi = plane.max();
    if (!(hi > lo)) {
        throw DegenerateSegmentation("constant image: no two-phase structure to segment",
                                     BinaryMask(plane.width(), plane.height()));
    }
    FloatPlane out(plane.width(), plane.height());
    auto src = plane.values();
    auto dst = out.values();
    const double range = hi - lo;
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = (src[i] - lo) / range;
    return out;
}

double chan_vese_energy(const FloatPlane& normalized, const BinaryMask& inside, const CVParams& params) {
    const int w = normalized.width();
    const int h = normalized.height();
    RegionStats in, out;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            auto& r = inside.at(x, y) ? in : out;
            r.n += 1.0;
            r.sum += normalized.at(x, y);
        }
    }
    const double c1 = in.mean();
    const double c2 = out.mean();
    double sse_in = 0.0;
    double sse_out = 0.0;
    long length = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double v = normalized.at(x, y);
            const bool here = inside.at(x, y);
            if (here) {
                sse_in += (v - c1) * (v - c1);
            } else {
                sse_out += (v - c2) * (v - c2);
            }
            if (x + 1 < w && inside.at(x + 1, y) != here) ++length;
            if (y + 1 < h && inside.at(x, y + 1) != here) ++length;
        }
    }
    return params.mu * static_cast<double>(length) + params.lambda_inside * sse_in +
           params.lambda_outside * sse_out;
}

namespace {

class TwoListEvolver {
public:
    TwoListEvolver(const FloatPlane& plane, const BinaryMask& initial, const CVParams& params)
        : plane_(plane), params_(params), w_(plane.width()), h_(plane.height()),
          label_(static_cast<std::size_t>(w_) * h_), queued_(label_.size(), 0) {
        for (int y = 0; y < h_; ++y) {
            for (int x = 0; x < w_; ++x) {
                const bool in = initial.at(x, y);
                label_[idx(x, y)] = in ? 1 : 0;
                auto& r = in ? in_ : out_;
                r.n += 1.0;
                r.sum += plane.at(x, y);
            }
        }
        for (int y = 0; y < h_; ++y) {
            for (int x = 0; x < w_; ++x) {
                const double v = plane.at(x, y);
                if (label_[idx(x, y)]) {
                    sse_in_ += (v - in_.mean()) * (v - in_.mean());
                } else {
                    sse_out_ += (v - out_.mean()) * (v - out_.mean());
                }
                if (x + 1 < w_ && label_[idx(x + 1, y)] != label_[idx(x, y)]) ++length_;
                if (y + 1 < h_ && label_[idx(x, y + 1)] != label_[idx(x, y)]) ++length_;
            }
        }
        for (int y = 0; y < h_; ++y) {
            for (int x = 0; x < w_; ++x) {
                if (on_boundary(x, y)) enqueue(idx(x, y));
            }
        }
    }

    double energy() const {
        return params_.mu * static_cast<double>(length_) + params_.lambda_inside * sse_in_ +
               params_.lambda_outside * sse_out_;
    }

    /// One sweep: outer list grows the interior, then inner list shrinks it.
    /// Returns the number of flipped pixels.
    int sweep() {
        std::vector<int> band;
        band.swap(band_);
        for (int p : band) queued_[p] = 0;

        int flips = 0;
        for (int pass = 0; pass < 2; ++pass) {
            const std::uint8_t from = pass == 0 ? 0 : 1;
            for (int p : band) {
                if (label_[p] != from) continue;
                const int x = p % w_;
                const int y = p / w_;
                if (!on_boundary(x, y)) continue;
                if (try_flip(x, y)) ++flips;
            }
        }
        for (int p : band) {
            const int x = p % w_;
            const int y = p / w_;
            if (on_boundary(x, y)) enqueue(p);
        }
        for (int p : touched_) {
            const int x = p % w_;
            const int y = p / w_;
            if (on_boundary(x, y)) enqueue(p);
        }
        touched_.clear();
        return flips;
    }

    BinaryMask inside() const {
        BinaryMask m(w_, h_);
        for (int y = 0; y < h_; ++y) {
            for (int x = 0; x < w_; ++x) m.set(x, y, label_[idx(x, y)] != 0);
        }
        return m;
    }

    double inside_mean() const { return in_.mean(); }
    double outside_mean() const { return out_.mean(); }

    FloatPlane phi() const {
        FloatPlane phi(w_, h_);
        for (int y = 0; y < h_; ++y) {
            for (int x = 0; x < w_; ++x) {
                const bool in = label_[idx(x, y)] != 0;
                const bool edge = on_boundary(x, y);
                phi.at(x, y) = in ? (edge ? -1.0 : -3.0) : (edge ? 1.0 : 3.0);
            }
        }
        return phi;
    }

private:
    std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * w_ + x; }

    bool on_boundary(int x, int y) const {
        const auto here = label_[idx(x, y)];
        for (int k = 0; k < 4; ++k) {
            const int nx = x + kDx4[k];
            const int ny = y + kDy4[k];
            if (nx < 0 || ny < 0 || nx >= w_ || ny >= h_) continue;
            if (label_[idx(nx, ny)] != here) return true;
        }
        return false;
    }

    void enqueue(std::size_t p) {
        if (queued_[p]) return;
        queued_[p] = 1;
        band_.push_back(static_cast<int>(p));
    }

    bool try_flip(int x, int y) {
        const std::size_t p = idx(x, y);
        const bool inside_now = label_[p] != 0;
        RegionStats& src = inside_now ? in_ : out_;
        RegionStats& dst = inside_now ? out_ : in_;
        if (src.n < 2.0) return false;  // never empty a phase

        const double lambda_src = inside_now ? params_.lambda_inside : params_.lambda_outside;
        const double lambda_dst = inside_now ? params_.lambda_outside : params_.lambda_inside;
        const double v = plane_.at(x, y);
        const double ds = v - src.mean();
        const double dd = v - dst.mean();
        const double sse_src_drop = src.n / (src.n - 1.0) * ds * ds;
        const double sse_dst_gain = dst.n / (dst.n + 1.0) * dd * dd;

        int length_delta = 0;
        for (int k = 0; k < 4; ++k) {
            const int nx = x + kDx4[k];
            const int ny = y + kDy4[k];
            if (nx < 0 || ny < 0 || nx >= w_ || ny >= h_) continue;
            // same label now -> differs after the flip, and vice versa
            length_delta += label_[idx(nx, ny)] == label_[p] ? 1 : -1;
        }
        const double delta = lambda_dst * sse_dst_gain - lambda_src * sse_src_drop +
                             params_.mu * static_cast<double>(length_delta);
        if (!(delta < -kFlipTolerance)) return false;

        double& sse_src = inside_now ? sse_in_ : sse_out_;
        double& sse_dst = inside_now ? sse_out_ : sse_in_;
        sse_src = std::max(0.0, sse_src - sse_src_drop);
        sse_dst += sse_dst_gain;
        src.sum -= v;
        src.n -= 1.0;
        dst.sum += v;
        dst.n += 1.0;
        length_ += length_delta;
        label_[p] = inside_now ? 0 : 1;

        touched_.push_back(static_cast<int>(p));
        for (int k = 0; k < 4; ++k) {
            const int nx = x + kDx4[k];
            const int ny = y + kDy4[k];
            if (nx < 0 || ny < 0 || nx >= w_ || ny >= h_) continue;
            touched_.push_back(static_cast<int>(idx(nx, ny)));
        }
        return true;
    }

    const FloatPlane& plane_;
    const CVParams& params_;
    int w_;
    int h_;
    std::vector<std::uint8_t> label_;
    std::vector<std::uint8_t> queued_;
    std::vector<int> band_;
    std::vector<int> touched_;
    RegionStats in_;
    RegionStats out_;
    double sse_in_ = 0.0;
    double sse_out_ = 0.0;
    long length_ = 0;
};

BinaryMask complement(const BinaryMask& m) {
    BinaryMask out(m.width(), m.height());
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) out.set(x, y, !m.at(x, y));
    }
    return out;
}

}  // namespace

SegmentationResult chan_vese_segment(const FloatPlane& plane, const CVParams& params) {
    params.validate();
    const FloatPlane normalized = normalize_intensity(plane);
    const LevelSetState init = shrink_initialize(plane.width(), plane.height(), params.margin_fraction);

    TwoListEvolver evolver(normalized, init.inside(), params);
    SegmentationResult result;
    result.energy_trace.push_back(evolver.energy());
    while (result.iterations_used < params.max_iters) {
        const int flips = evolver.sweep();
        ++result.iterations_used;
        result.energy_trace.push_back(evolver.energy());
        if (flips == 0) {
            result.converged = true;
            break;
        }
    }

    result.state.phi = evolver.phi();
    result.state.inside_mean = evolver.inside_mean();
    result.state.outside_mean = evolver.outside_mean();
    result.state.iteration = result.iterations_used;

    const BinaryMask inside = evolver.inside();
    result.mask = evolver.inside_mean() <= evolver.outside_mean() ? inside : complement(inside);
    const std::size_t fg = result.mask.count();
    if (fg == 0 || fg == static_cast<std::size_t>(plane.width()) * plane.height()) {
        throw DegenerateSegmentation("segmentation collapsed to an empty or full-frame region", result.mask);
    }
    return result;
}

double jaccard(const BinaryMask& truth, const BinaryMask& pred) {
    if (truth.width() != pred.width() || truth.height() != pred.height()) {
        throw InvalidInput("jaccard: mask dimensions differ");
    }
    // y in {0,1}: sum y_t*y_p / (sum y_t^2 + sum y_p^2 - sum y_t*y_p)
    auto t = truth.bits();
    auto p = pred.bits();
    std::size_t tp = 0, tt = 0, pp = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        tp += static_cast<std::size_t>(t[i] * p[i]);
        tt += static_cast<std::size_t>(t[i] * t[i]);
        pp += static_cast<std::size_t>(p[i] * p[i]);
    }
    const std::size_t denom = tt + pp - tp;
    if (denom == 0) return 1.0;
    return static_cast<double>(tp) / static_cast<double>(denom);
}

BinaryMask largest_component(const BinaryMask& mask) {
    const int w = mask.width();
    const int h = mask.height();
    std::vector<int> comp(static_cast<std::size_t>(w) * h, -1);
    std::vector<std::size_t> sizes;
    std::vector<int> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t start = static_cast<std::size_t>(y) * w + x;
            if (!mask.at(x, y) || comp[start] >= 0) continue;
            const int id = static_cast<int>(sizes.size());
            sizes.push_back(0);
            comp[start] = id;
            stack.push_back(static_cast<int>(start));
            while (!stack.empty()) {
                const int p = stack.back();
                stack.pop_back();
                ++sizes[id];
                const int px = p % w;
                const int py = p / w;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = px + dx;
                        const int ny = py + dy;
                        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                        const std::size_t q = static_cast<std::size_t>(ny) * w + nx;
                        if (!mask.at(nx, ny) || comp[q] >= 0) continue;
                        comp[q] = id;
                        stack.push_back(static_cast<int>(q));
                    }
                }
            }
        }
    }
    BinaryMask out(w, h);
    if (sizes.empty()) return out;
    const int best = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    for (std::size_t i = 0; i < comp.size(); ++i) {
        if (comp[i] == best) out.set(static_cast<int>(i % w), static_cast<int>(i / w), true);
    }
    return out;
}

BinaryMask fill_holes(const BinaryMask& mask) {
    const int w = mask.width();
    const int h = mask.height();
    std::vector<std::uint8_t> outside(static_cast<std::size_t>(w) * h, 0);
    std::vector<int> stack;
    auto seed = [&](int x, int y) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        if (mask.at(x, y) || outside[p]) return;
        outside[p] = 1;
        stack.push_back(static_cast<int>(p));
    };
    for (int x = 0; x < w; ++x) {
        seed(x, 0);
        seed(x, h - 1);
    }
    for (int y = 0; y < h; ++y) {
        seed(0, y);
        seed(w - 1, y);
    }
    while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        const int px = p % w;
        const int py = p / w;
        for (int k = 0; k < 4; ++k) {
            const int nx = px + kDx4[k];
            const int ny = py + kDy4[k];
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            seed(nx, ny);
        }
    }
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) out.set(x, y, !outside[static_cast<std::size_t>(y) * w + x]);
    }
    return out;
}

LesionSegmentation segment_lesion(const RasterImage& img, const SegmentationConfig& config) {
    LesionSegmentation out;
    out.preprocessed = preprocess(img, config.preprocess);
    out.working = chan_vese_segment(out.preprocessed.plane, config.chan_vese);
    BinaryMask cleaned = fill_holes(largest_component(out.working.mask));
    const std::size_t fg = cleaned.count();
    if (fg == 0 || fg == static_cast<std::size_t>(cleaned.width()) * cleaned.height()) {
        throw DegenerateSegmentation("segmentation collapsed to an empty or full-frame region", cleaned);
    }
    if (cleaned.width() != img.width() || cleaned.height() != img.height()) {
        cleaned = imaging::resample_mask(cleaned, img.width(), img.height());
    }
    out.mask = std::move(cleaned);
    return out;
}

}  // namespace lesionkit::segmentation
