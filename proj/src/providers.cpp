#include "lesionkit/providers.hpp"

#include <algorithm>
#include <cmath>

#include "lesionkit/imaging.hpp"

namespace lesionkit::providers {

std::string_view feature_class_name(FeatureClass c) {
    switch (c) {
        case FeatureClass::Globules: return "globules";
        case FeatureClass::Streaks: return "streaks";
        case FeatureClass::PigmentNetwork: return "pigment_network";
        case FeatureClass::MiliaLikeCyst: return "milia_like_cyst";
        case FeatureClass::NegativeNetwork: return "negative_network";
    }
    return "";
}

std::optional<FeatureClass> feature_class_from_name(std::string_view name) {
    for (auto c : kAllFeatureClasses) {
        if (feature_class_name(c) == name) return c;
    }
    return std::nullopt;
}

FeatureBands default_feature_bands() {
    return {
        {FeatureClass::Globules, {1.5, 3.0, Polarity::Dark, 2.0, 4.0}},
        {FeatureClass::Streaks, {1.0, 2.5, Polarity::Dark, 2.5, 4.0}},
        {FeatureClass::PigmentNetwork, {1.0, 2.0, Polarity::Dark, 2.0, 3.0}},
        {FeatureClass::MiliaLikeCyst, {1.5, 3.0, Polarity::Bright, 2.5, 6.0}},
        {FeatureClass::NegativeNetwork, {1.0, 2.0, Polarity::Bright, 2.0, 3.0}},
    };
}

namespace {

// Gaussian of (plane * weight) divided by Gaussian of weight, so pixels
// outside the lesion do not bleed into the response.
FloatPlane masked_blur(const FloatPlane& plane, const FloatPlane& weight, double sigma) {
    const int k = imaging::kernel_size_for_sigma(sigma);
    FloatPlane num(plane.width(), plane.height());
    auto n = num.values();
    const auto p = plane.values();
    const auto w = weight.values();
    for (std::size_t i = 0; i < n.size(); ++i) n[i] = p[i] * w[i];
    const FloatPlane bn = imaging::gaussian_filter(num, k, sigma);
    const FloatPlane bw = imaging::gaussian_filter(weight, k, sigma);
    FloatPlane out(plane.width(), plane.height());
    auto o = out.values();
    const auto a = bn.values();
    const auto b = bw.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = b[i] > 1e-9 ? a[i] / b[i] : 0.0;
    return out;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

}  // namespace

BinaryMask heuristic_feature_mask(const RasterImage& img, const BinaryMask& lesion, FeatureClass cls,
                                  const FeatureBands& bands) {
    if (img.width() != lesion.width() || img.height() != lesion.height()) {
        throw InvalidInput("lesion mask does not match the image size");
    }
    const auto it = bands.find(cls);
    if (it == bands.end()) {
        throw InvalidParameter("no frequency band configured for " + std::string(feature_class_name(cls)));
    }
    const FeatureBand& band = it->second;
    if (!(band.sigma_fine > 0.0) || !(band.sigma_coarse > band.sigma_fine)) {
        throw InvalidParameter("feature band needs 0 < sigma_fine < sigma_coarse");
    }
    BinaryMask out(img.width(), img.height());
    if (!lesion.any()) return out;

    FloatPlane luma = imaging::rgb_to_yuv(imaging::ensure_rgb(img)).y;
    for (double& v : luma.values()) v *= 255.0;
    FloatPlane weight(img.width(), img.height());
    auto wv = weight.values();
    const auto bits = lesion.bits();
    for (std::size_t i = 0; i < wv.size(); ++i) wv[i] = bits[i] ? 1.0 : 0.0;

    const FloatPlane fine = masked_blur(luma, weight, band.sigma_fine);
    const FloatPlane coarse = masked_blur(luma, weight, band.sigma_coarse);
    const double sign = band.polarity == Polarity::Dark ? 1.0 : -1.0;
    std::vector<double> response(wv.size(), 0.0);
    std::vector<double> inside;
    const auto f = fine.values();
    const auto c = coarse.values();
    for (std::size_t i = 0; i < response.size(); ++i) {
        if (!bits[i]) continue;
        response[i] = sign * (c[i] - f[i]);
        inside.push_back(response[i]);
    }
    const double med = median(inside);
    std::vector<double> dev;
    dev.reserve(inside.size());
    for (double r : inside) dev.push_back(std::abs(r - med));
    const double robust_sd = 1.4826 * median(dev);
    const double threshold = std::max(band.min_contrast, med + band.k_sigma * robust_sd);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * img.width() + x;
            if (bits[i] && response[i] > threshold) out.set(x, y, true);
        }
    }
    return out;
}

std::string_view kind_name(ProviderKind k) {
    switch (k) {
        case ProviderKind::Classifier: return "classifier";
        case ProviderKind::Segmenter: return "segmenter";
        case ProviderKind::FeatureMask: return "feature-mask";
    }
    return "";
}

void Registry::claim(const ProviderDescriptor& d) {
    if (d.id.empty()) throw RegistrationError("provider id must not be empty");
    if (d.id == kUnavailable) throw RegistrationError("provider id 'unavailable' is reserved");
    const bool taken = (d.kind == ProviderKind::Classifier && classifiers_.count(d.id)) ||
                       (d.kind == ProviderKind::Segmenter && segmenters_.count(d.id)) ||
                       (d.kind == ProviderKind::FeatureMask && feature_masks_.count(d.id));
    if (taken) {
        throw RegistrationError(std::string(kind_name(d.kind)) + " provider '" + d.id + "' is already registered");
    }
    if (!defaults_.count(d.kind)) defaults_[d.kind] = d.id;
    order_.push_back(d);
}

void Registry::register_classifier(ProviderDescriptor d, ClassifierFn fn) {
    d.kind = ProviderKind::Classifier;
    if (!d.taxonomy) throw RegistrationError("classifier '" + d.id + "' must declare a taxonomy");
    claim(d);
    classifiers_.emplace(d.id, Provider<ClassifierFn>{d, std::move(fn)});
}

void Registry::register_segmenter(ProviderDescriptor d, SegmenterFn fn) {
    d.kind = ProviderKind::Segmenter;
    claim(d);
    segmenters_.emplace(d.id, Provider<SegmenterFn>{d, std::move(fn)});
}

void Registry::register_feature_mask(ProviderDescriptor d, FeatureMaskFn fn) {
    d.kind = ProviderKind::FeatureMask;
    claim(d);
    feature_masks_.emplace(d.id, Provider<FeatureMaskFn>{d, std::move(fn)});
}

void Registry::set_default(ProviderKind kind, const std::string& id) {
    const bool known = (kind == ProviderKind::Classifier && classifiers_.count(id)) ||
                       (kind == ProviderKind::Segmenter && segmenters_.count(id)) ||
                       (kind == ProviderKind::FeatureMask && feature_masks_.count(id));
    if (!known) {
        throw RegistrationError("configured " + std::string(kind_name(kind)) + " provider '" + id +
                                "' is not registered");
    }
    defaults_[kind] = id;
}

void Registry::bind_feature_class(FeatureClass cls, const std::string& id) {
    if (id != kUnavailable && !feature_masks_.count(id)) {
        throw RegistrationError("feature class '" + std::string(feature_class_name(cls)) +
                                "' is bound to unknown provider '" + id + "'");
    }
    feature_bindings_[cls] = id;
}

namespace {

template <class Map>
const auto& lookup(const Map& m, std::string_view id, ProviderKind kind) {
    const auto it = m.find(std::string(id));
    if (it == m.end()) {
        throw ProviderUnavailable("no " + std::string(kind_name(kind)) + " provider '" + std::string(id) + "'");
    }
    return it->second;
}

}  // namespace

const Provider<ClassifierFn>& Registry::classifier(std::string_view id) const {
    return lookup(classifiers_, id.empty() ? default_id(ProviderKind::Classifier) : std::string(id),
                  ProviderKind::Classifier);
}

const Provider<ClassifierFn>& Registry::classifier_for(const classify::ClassTaxonomy& taxonomy) const {
    const auto& dflt = classifier();
    if (dflt.descriptor.taxonomy == taxonomy) return dflt;
    for (const auto& d : order_) {
        if (d.kind == ProviderKind::Classifier && d.taxonomy == taxonomy) return classifiers_.at(d.id);
    }
    throw ProviderUnavailable("no classifier is loaded for the " + std::string(taxonomy.name()) + " taxonomy");
}

const Provider<SegmenterFn>& Registry::segmenter(std::string_view id) const {
    return lookup(segmenters_, id.empty() ? default_id(ProviderKind::Segmenter) : std::string(id),
                  ProviderKind::Segmenter);
}

const Provider<FeatureMaskFn>& Registry::feature_mask(FeatureClass cls, std::string_view id) const {
    std::string chosen(id);
    if (chosen.empty()) {
        const auto it = feature_bindings_.find(cls);
        chosen = it != feature_bindings_.end() ? it->second : default_id(ProviderKind::FeatureMask);
    }
    if (chosen == kUnavailable) {
        throw ProviderUnavailable("feature class '" + std::string(feature_class_name(cls)) +
                                  "' has no provider configured");
    }
    return lookup(feature_masks_, chosen, ProviderKind::FeatureMask);
}

std::vector<ProviderDescriptor> Registry::descriptors() const { return order_; }

std::string Registry::default_id(ProviderKind kind) const {
    const auto it = defaults_.find(kind);
    if (it == defaults_.end()) {
        throw ProviderUnavailable("no " + std::string(kind_name(kind)) + " provider is registered");
    }
    return it->second;
}

void Registry::check_complete() const {
    for (auto k : {ProviderKind::Classifier, ProviderKind::Segmenter, ProviderKind::FeatureMask}) {
        if (!defaults_.count(k)) {
            throw RegistrationError("no default " + std::string(kind_name(k)) + " provider registered");
        }
    }
}

}  // namespace lesionkit::providers
