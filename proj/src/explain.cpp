#include "lesionkit/explain.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>
#include <thread>

#include "lesionkit/imaging.hpp"

namespace lesionkit::explain {

namespace {

constexpr int kChunk = 32;
constexpr double kFlatTolerance = 1e-12;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class Stream {
public:
    explicit Stream(std::uint64_t state) : state_(state) {}
    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return splitmix64(state_);
    }
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    int below(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }

private:
    std::uint64_t state_;
};

// Bilinear sample position for output pixel u of an s-cell grid stretched to `span` pixels.
void axis_weights(int u, int s, int span, int& i0, int& i1, double& t) {
    const double g = (u + 0.5) * s / span - 0.5;
    const double c = std::clamp(g, 0.0, static_cast<double>(s - 1));
    i0 = static_cast<int>(std::floor(c));
    i1 = std::min(i0 + 1, s - 1);
    t = c - i0;
}

}  // namespace

void RiseParams::validate() const {
    if (n_masks < 1) throw InvalidParameter("n_masks must be >= 1, got " + std::to_string(n_masks));
    if (grid_cells < 2) throw InvalidParameter("grid_cells must be >= 2, got " + std::to_string(grid_cells));
    if (!(p_on > 0.0 && p_on < 1.0)) throw InvalidParameter("p_on must lie in (0, 1)");
    if (threads < 1) throw InvalidParameter("threads must be >= 1");
}

MaskGenerator::MaskGenerator(const RiseParams& params, int width, int height)
    : params_(params), width_(width), height_(height) {
    params_.validate();
    if (width < 1 || height < 1) throw InvalidInput("mask dimensions must be positive");
    const int s = params_.grid_cells;
    cell_w_ = (width + s - 1) / s;
    cell_h_ = (height + s - 1) / s;
}

FloatPlane MaskGenerator::mask(int index) const {
    const int s = params_.grid_cells;
    Stream rng(splitmix64(params_.seed ^ splitmix64(static_cast<std::uint64_t>(index))));
    std::vector<double> grid(static_cast<std::size_t>(s) * s);
    for (double& g : grid) g = rng.uniform() < params_.p_on ? 1.0 : 0.0;
    const int ox = rng.below(cell_w_);
    const int oy = rng.below(cell_h_);
    const int up_w = (s + 1) * cell_w_;
    const int up_h = (s + 1) * cell_h_;

    std::vector<int> x0(width_), x1(width_);
    std::vector<double> tx(width_);
    for (int x = 0; x < width_; ++x) axis_weights(x + ox, s, up_w, x0[x], x1[x], tx[x]);

    FloatPlane out(width_, height_);
    for (int y = 0; y < height_; ++y) {
        int y0, y1;
        double ty;
        axis_weights(y + oy, s, up_h, y0, y1, ty);
        const double* r0 = &grid[static_cast<std::size_t>(y0) * s];
        const double* r1 = &grid[static_cast<std::size_t>(y1) * s];
        for (int x = 0; x < width_; ++x) {
            const double top = r0[x0[x]] + (r0[x1[x]] - r0[x0[x]]) * tx[x];
            const double bot = r1[x0[x]] + (r1[x1[x]] - r1[x0[x]]) * tx[x];
            out.at(x, y) = top + (bot - top) * ty;
        }
    }
    return out;
}

std::vector<FloatPlane> generate_masks(const RiseParams& params, int width, int height) {
    MaskGenerator gen(params, width, height);
    std::vector<FloatPlane> out;
    out.reserve(static_cast<std::size_t>(params.n_masks));
    for (int i = 0; i < params.n_masks; ++i) out.push_back(gen.mask(i));
    return out;
}

RasterImage apply_mask(const RasterImage& img, const FloatPlane& mask) {
    if (img.width() != mask.width() || img.height() != mask.height()) {
        throw InvalidInput("mask and image dimensions differ");
    }
    RasterImage out = img;
    const int ch = img.channels();
    auto px = out.data();
    const auto m = mask.values();
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (int c = 0; c < ch; ++c) {
            auto& v = px[i * ch + c];
            v = static_cast<std::uint8_t>(std::lround(v * m[i]));
        }
    }
    return out;
}

FloatPlane normalize_saliency(const FloatPlane& raw) {
    FloatPlane out(raw.width(), raw.height(), 0.0);
    const double lo = raw.min();
    const double hi = raw.max();
    if (!(hi - lo > kFlatTolerance * std::max(1.0, std::max(std::abs(lo), std::abs(hi))))) return out;
    const double range = hi - lo;
    auto dst = out.values();
    const auto src = raw.values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = (src[i] - lo) / range;
    // exact extremes regardless of rounding
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (src[i] == lo) dst[i] = 0.0;
        if (src[i] == hi) dst[i] = 1.0;
    }
    return out;
}

SaliencyMap rise(const RasterImage& img, const Classifier& classifier, const RiseParams& params) {
    params.validate();
    if (img.empty()) throw InvalidInput("cannot explain an empty image");
    if (!classifier) throw InvalidParameter("no classifier supplied");
    const MaskGenerator gen(params, img.width(), img.height());
    const int w = img.width();
    const int h = img.height();
    const int n_chunks = (params.n_masks + kChunk - 1) / kChunk;

    // Each chunk sums its masks in index order; chunks are merged in chunk order,
    // so the result is identical for any thread count.
    struct Partial {
        FloatPlane weighted;
        FloatPlane coverage;
        double f_sum = 0.0;
    };
    auto fresh = [&] { return Partial{FloatPlane(w, h, 0.0), FloatPlane(w, h, 0.0), 0.0}; };
    auto merge = [](Partial& into, const Partial& part) {
        auto a = into.weighted.values();
        auto c = into.coverage.values();
        const auto pa = part.weighted.values();
        const auto pc = part.coverage.values();
        for (std::size_t k = 0; k < a.size(); ++k) {
            a[k] += pa[k];
            c[k] += pc[k];
        }
        into.f_sum += part.f_sum;
    };
    auto run_chunk = [&](int chunk, Partial& acc) {
        const int begin = chunk * kChunk;
        const int end = std::min(params.n_masks, begin + kChunk);
        for (int i = begin; i < end; ++i) {
            const FloatPlane m = gen.mask(i);
            classify::Prediction pred;
            try {
                pred = classifier(apply_mask(img, m));
            } catch (const std::exception& e) {
                throw ExplanationAborted("classifier failed on mask " + std::to_string(i) + ": " + e.what());
            }
            if (!pred.valid() || params.target_class >= pred.probs.size()) {
                throw ExplanationAborted("classifier returned an invalid prediction on mask " + std::to_string(i) +
                                         " for target class " + std::to_string(params.target_class));
            }
            const double f = pred.probs[params.target_class];
            auto a = acc.weighted.values();
            auto c = acc.coverage.values();
            const auto mv = m.values();
            for (std::size_t k = 0; k < a.size(); ++k) {
                a[k] += f * mv[k];
                c[k] += mv[k];
            }
            acc.f_sum += f;
        }
    };

    Partial total = fresh();
    const int workers = std::max(1, std::min(params.threads, n_chunks));
    if (workers == 1) {
        for (int c = 0; c < n_chunks; ++c) {
            Partial part = fresh();
            run_chunk(c, part);
            merge(total, part);
        }
    } else {
        for (int base = 0; base < n_chunks; base += workers) {
            const int count = std::min(workers, n_chunks - base);
            std::vector<Partial> parts;
            for (int j = 0; j < count; ++j) parts.push_back(fresh());
            std::vector<std::exception_ptr> errors(count);
            std::vector<std::thread> pool;
            for (int j = 0; j < count; ++j) {
                pool.emplace_back([&, j] {
                    try {
                        run_chunk(base + j, parts[j]);
                    } catch (...) {
                        errors[j] = std::current_exception();
                    }
                });
            }
            for (auto& t : pool) t.join();
            for (auto& e : errors) {
                if (e) std::rethrow_exception(e);
            }
            for (const auto& part : parts) merge(total, part);
        }
    }

    // Per-pixel coverage replaces its expectation N * p_on; pixels never
    // uncovered fall back to the mean score.
    const double f_mean = total.f_sum / params.n_masks;
    FloatPlane raw(w, h, 0.0);
    auto r = raw.values();
    const auto a = total.weighted.values();
    const auto c = total.coverage.values();
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = c[k] > 0.0 ? a[k] / c[k] : f_mean;

    SaliencyMap out;
    out.values = normalize_saliency(raw);
    out.raw_accumulator = std::move(raw);
    out.params_used = params;
    return out;
}

RasterImage render_explanation(const RasterImage& img, const SaliencyMap& map, double opacity) {
    return imaging::blend_overlay(img, imaging::colorize(map.values), opacity);
}

}  // namespace lesionkit::explain
