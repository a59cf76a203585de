#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lesionkit/abcd.hpp"
#include "lesionkit/imaging.hpp"

namespace lesionkit::classify {

enum class TaxonomyKind { Binary, Multi8 };

/// Ordered class labels. Binary order is fixed: benign = 0, malignant = 1.
struct ClassTaxonomy {
    TaxonomyKind kind = TaxonomyKind::Binary;
    std::vector<std::string> labels;

    static ClassTaxonomy binary();
    static ClassTaxonomy multi8();
    static ClassTaxonomy from_name(std::string_view name);  // "binary" | "multi8"

    std::size_t size() const noexcept { return labels.size(); }
    std::string_view name() const noexcept { return kind == TaxonomyKind::Binary ? "binary" : "multi8"; }
    std::size_t index_of(std::string_view label) const;
    bool operator==(const ClassTaxonomy&) const = default;
};

/// Human-readable name of a multi-class abbreviation ("MEL" -> "Melanoma").
std::string_view long_label(std::string_view short_label);

struct Prediction {
    std::vector<double> probs;

    /// Each p in [0,1] and the sum within 1e-6 of 1.
    bool valid() const;
};

struct ConfidenceEntry {
    std::size_t index = 0;
    std::string label;
    double p = 0.0;
    double confidence_pct = 0.0;
};

struct ConfidenceReport {
    double uniform_threshold = 0.0;  // u = 1/n
    std::vector<ConfidenceEntry> entries;
};

/// c = (p - u) / (1 - u) * 100 with u = 1/n.
double confidence_pct(double p, std::size_t n_classes);

/// Labels with p > 1/n, descending by p; ties keep taxonomy order.
ConfidenceReport confidence(const Prediction& pred, const ClassTaxonomy& taxonomy);

struct MalignancyColor {
    imaging::Rgb rgb;
    std::string hex;  // "#rrggbb"
};

/// Green (0) -> yellow (0.5) -> red (1) ramp over p_malignant.
MalignancyColor malignancy_color(const Prediction& pred, const ClassTaxonomy& taxonomy);

inline constexpr std::size_t kFeatureCount = 11;
using FeatureVector = std::array<double, kFeatureCount>;

/// Names in vector order.
const std::array<std::string_view, kFeatureCount>& feature_names();

/// [AS_v, AS_h, 6 centroid distances / rect_major, irregularity, d_h_mm, d_v_mm]
FeatureVector raw_features(const abcd::AbcdFeatures& f);

struct Standardization {
    FeatureVector means{};
    FeatureVector scales = [] {
        FeatureVector s{};
        s.fill(1.0);
        return s;
    }();
};

Standardization fit_standardization(std::span<const FeatureVector> rows);

/// (raw - mean) / scale, element-wise.
FeatureVector featurize(const abcd::AbcdFeatures& f, const Standardization& st = {});
FeatureVector standardize(const FeatureVector& raw, const Standardization& st);

enum class LossKind { Logistic, Hinge };
std::string_view loss_name(LossKind k);
LossKind loss_from_name(std::string_view name);

struct TrainingMetadata {
    std::uint64_t seed = 0;
    double l2 = 0.0;
    int epochs = 0;
    std::size_t samples = 0;
    std::vector<double> loss_history;
};

struct LinearModel {
    std::string id;
    ClassTaxonomy taxonomy;
    LossKind loss_kind = LossKind::Logistic;
    std::vector<double> weights;  // row-major [n_classes x kFeatureCount]
    std::vector<double> bias;     // [n_classes]
    Standardization standardization;
    TrainingMetadata training;

    /// Zero-parameter model over `taxonomy` (uniform predictions).
    static LinearModel zeros(const ClassTaxonomy& taxonomy, std::string id = "zero");
    void validate() const;
};

struct TrainParams {
    LossKind loss = LossKind::Logistic;
    double l2 = 1e-3;
    int max_epochs = 500;
    std::uint64_t seed = 42;
    double gradient_tolerance = 1e-8;
};

struct LabeledSample {
    FeatureVector features;  // raw, unstandardized
    std::size_t label = 0;
};

/// Objective over packed parameters [W row-major | b] on standardized rows.
struct Objective {
    double loss = 0.0;
    std::vector<double> gradient;
};
Objective evaluate_objective(std::span<const double> params, std::span<const FeatureVector> rows,
                             std::span<const std::size_t> labels, std::size_t n_classes, LossKind loss, double l2);

/// Full-batch gradient descent with Armijo backtracking; the recorded loss
/// history is non-increasing. Throws TrainingError on degenerate data.
LinearModel train(std::span<const LabeledSample> data, const ClassTaxonomy& taxonomy, const TrainParams& params = {},
                  std::string id = "abcd-linear");

/// Softmax over W x + b for an already standardized vector.
Prediction predict(const LinearModel& model, std::span<const double> x);
Prediction predict(const LinearModel& model, const abcd::AbcdFeatures& f);

/// Untrained prior over ABCD features for the binary taxonomy: scores rise
/// with asymmetry, border irregularity, color dispersion and diameter.
LinearModel prior_binary_model();

}  // namespace lesionkit::classify
