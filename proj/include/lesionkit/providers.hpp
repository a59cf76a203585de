#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lesionkit/classify.hpp"
#include "lesionkit/image.hpp"

namespace lesionkit::providers {

enum class FeatureClass { Globules, Streaks, PigmentNetwork, MiliaLikeCyst, NegativeNetwork };
inline constexpr std::array<FeatureClass, 5> kAllFeatureClasses{
    FeatureClass::Globules, FeatureClass::Streaks, FeatureClass::PigmentNetwork, FeatureClass::MiliaLikeCyst,
    FeatureClass::NegativeNetwork};

std::string_view feature_class_name(FeatureClass c);  // "globules", "pigment_network", ...
std::optional<FeatureClass> feature_class_from_name(std::string_view name);

enum class Polarity { Dark, Bright };

/// Difference-of-Gaussians band and detection threshold for one feature class.
struct FeatureBand {
    double sigma_fine = 1.5;
    double sigma_coarse = 3.0;
    Polarity polarity = Polarity::Dark;
    double k_sigma = 2.0;       // threshold in robust std of the in-lesion response
    double min_contrast = 4.0;  // absolute floor, luma levels
};

using FeatureBands = std::map<FeatureClass, FeatureBand>;
FeatureBands default_feature_bands();

/// Band-pass luma response thresholded inside the lesion. Foreground never
/// leaves the lesion mask. Deterministic.
BinaryMask heuristic_feature_mask(const RasterImage& img, const BinaryMask& lesion, FeatureClass cls,
                                  const FeatureBands& bands = default_feature_bands());

enum class ProviderKind { Classifier, Segmenter, FeatureMask };
std::string_view kind_name(ProviderKind k);

struct Capabilities {
    bool white_box_explainable = false;
    bool batch = false;
};

struct ProviderDescriptor {
    ProviderKind kind = ProviderKind::Classifier;
    std::string id;
    std::optional<classify::ClassTaxonomy> taxonomy;  // classifiers only
    Capabilities capabilities;
    bool heuristic = false;  // non-clinical placeholder output
};

using ClassifierFn = std::function<classify::Prediction(const RasterImage&)>;
using SegmenterFn = std::function<BinaryMask(const RasterImage&)>;
using FeatureMaskFn = std::function<BinaryMask(const RasterImage&, const BinaryMask& lesion, FeatureClass)>;

template <class Fn>
struct Provider {
    ProviderDescriptor descriptor;
    Fn fn;
};

/// Id reserved for feature classes deliberately configured without a provider.
inline constexpr std::string_view kUnavailable = "unavailable";

class ProviderUnavailable : public Error {
public:
    using Error::Error;
};

class Registry {
public:
    void register_classifier(ProviderDescriptor d, ClassifierFn fn);
    void register_segmenter(ProviderDescriptor d, SegmenterFn fn);
    void register_feature_mask(ProviderDescriptor d, FeatureMaskFn fn);

    /// Pins the default for a kind; the first registration of a kind is the
    /// initial default. Unknown ids throw RegistrationError.
    void set_default(ProviderKind kind, const std::string& id);
    /// Routes one feature class to a provider id or to kUnavailable.
    void bind_feature_class(FeatureClass cls, const std::string& id);

    /// Empty id resolves to the default; a named id is never substituted.
    const Provider<ClassifierFn>& classifier(std::string_view id = {}) const;
    const Provider<ClassifierFn>& classifier_for(const classify::ClassTaxonomy& taxonomy) const;
    const Provider<SegmenterFn>& segmenter(std::string_view id = {}) const;
    /// Throws ProviderUnavailable when the class is bound to kUnavailable.
    const Provider<FeatureMaskFn>& feature_mask(FeatureClass cls, std::string_view id = {}) const;

    std::vector<ProviderDescriptor> descriptors() const;
    std::string default_id(ProviderKind kind) const;

    /// Throws RegistrationError if any kind lacks a default.
    void check_complete() const;

private:
    void claim(const ProviderDescriptor& d);

    std::map<std::string, Provider<ClassifierFn>> classifiers_;
    std::map<std::string, Provider<SegmenterFn>> segmenters_;
    std::map<std::string, Provider<FeatureMaskFn>> feature_masks_;
    std::map<ProviderKind, std::string> defaults_;
    std::map<FeatureClass, std::string> feature_bindings_;
    std::vector<ProviderDescriptor> order_;
};

}  // namespace lesionkit::providers
