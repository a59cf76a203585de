#include "lesionkit/classify.hpp"

#include "lesionkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>

namespace lesionkit::classify {

namespace {

std::uint8_t lerp_u8(double a, double b, double t) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(a + (b - a) * t), 0L, 255L));
}

std::vector<double> softmax(std::span<const double> scores) {
    const double mx = *std::max_element(scores.begin(), scores.end());
    std::vector<double> out(scores.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::exp(scores[i] - mx);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

}  // namespace

ClassTaxonomy ClassTaxonomy::binary() { return {TaxonomyKind::Binary, {"benign", "malignant"}}; }

ClassTaxonomy ClassTaxonomy::multi8() {
    return {TaxonomyKind::Multi8, {"MEL", "NV", "BCC", "AK", "BKL", "DF", "VASC", "SCC"}};
}

ClassTaxonomy ClassTaxonomy::from_name(std::string_view name) {
    if (name == "binary") return binary();
    if (name == "multi8") return multi8();
    throw InvalidParameter("unknown taxonomy '" + std::string(name) + "' (expected binary or multi8)");
}

std::size_t ClassTaxonomy::index_of(std::string_view label) const {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == label) return i;
    }
    throw InvalidInput("label '" + std::string(label) + "' is not part of the " + std::string(name()) + " taxonomy");
}

std::string_view long_label(std::string_view s) {
    if (s == "MEL") return "Melanoma";
    if (s == "NV") return "Melanocytic nevus";
    if (s == "BCC") return "Basal cell carcinoma";
    if (s == "AK") return "Actinic keratosis";
    if (s == "BKL") return "Benign keratosis";
    if (s == "DF") return "Dermatofibroma";
    if (s == "VASC") return "Vascular lesion";
    if (s == "SCC") return "Squamous cell carcinoma";
    if (s == "benign") return "Benign";
    if (s == "malignant") return "Malignant";
    return s;
}

bool Prediction::valid() const {
    if (probs.empty()) return false;
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) return false;
        sum += p;
    }
    return std::abs(sum - 1.0) <= 1e-6;
}

double confidence_pct(double p, std::size_t n_classes) {
    if (n_classes < 2) throw InvalidParameter("confidence needs at least two classes");
    const double u = 1.0 / static_cast<double>(n_classes);
    return (p - u) / (1.0 - u) * 100.0;
}

ConfidenceReport confidence(const Prediction& pred, const ClassTaxonomy& taxonomy) {
    if (pred.probs.size() != taxonomy.size()) throw InvalidInput("prediction does not match taxonomy size");
    if (!pred.valid()) throw InvalidInput("prediction is not a probability distribution");
    ConfidenceReport report;
    const std::size_t n = taxonomy.size();
    report.uniform_threshold = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = pred.probs[i];
        if (!(p > report.uniform_threshold)) continue;
        report.entries.push_back({i, taxonomy.labels[i], p, confidence_pct(p, n)});
    }
    std::stable_sort(report.entries.begin(), report.entries.end(),
                     [](const ConfidenceEntry& a, const ConfidenceEntry& b) { return a.p > b.p; });
    return report;
}

MalignancyColor malignancy_color(const Prediction& pred, const ClassTaxonomy& taxonomy) {
    if (taxonomy.kind != TaxonomyKind::Binary || pred.probs.size() != 2) {
        throw InvalidInput("malignancy color requires a binary prediction");
    }
    const double p = std::clamp(pred.probs[1], 0.0, 1.0);
    MalignancyColor out;
    // stops: green (0,255,0) at 0, yellow (255,255,0) at 0.5, red (255,0,0) at 1
    if (p <= 0.5) {
        out.rgb = {lerp_u8(0, 255, p / 0.5), 255, 0};
    } else {
        out.rgb = {255, lerp_u8(255, 0, (p - 0.5) / 0.5), 0};
    }
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", out.rgb.r, out.rgb.g, out.rgb.b);
    out.hex = buf;
    return out;
}

const std::array<std::string_view, kFeatureCount>& feature_names() {
    static const std::array<std::string_view, kFeatureCount> names{
        "asym_vertical_pct",   "asym_horizontal_pct",   "dist_white",           "dist_red",
        "dist_light_brown",    "dist_dark_brown",       "dist_blue_gray",       "dist_black",
        "irregularity_index",  "diameter_h_mm",         "diameter_v_mm"};
    return names;
}

FeatureVector raw_features(const abcd::AbcdFeatures& f) {
    FeatureVector x{};
    x[0] = f.asym_vertical_pct;
    x[1] = f.asym_horizontal_pct;
    for (std::size_t i = 0; i < 6; ++i) {
        x[2 + i] = f.rect_major_px > 0.0 ? f.centroid_distances[i] / f.rect_major_px : 0.0;
    }
    x[8] = f.irregularity_index;
    x[9] = f.diameter_h_mm;
    x[10] = f.diameter_v_mm;
    return x;
}

Standardization fit_standardization(std::span<const FeatureVector> rows) {
    Standardization st;
    if (rows.empty()) return st;
    const double n = static_cast<double>(rows.size());
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        double mean = 0.0;
        for (const auto& r : rows) mean += r[j];
        mean /= n;
        double var = 0.0;
        for (const auto& r : rows) var += (r[j] - mean) * (r[j] - mean);
        const double sd = std::sqrt(var / n);
        st.means[j] = mean;
        st.scales[j] = sd > 1e-12 ? sd : 1.0;
    }
    return st;
}

FeatureVector standardize(const FeatureVector& raw, const Standardization& st) {
    FeatureVector out{};
    for (std::size_t j = 0; j < kFeatureCount; ++j) out[j] = (raw[j] - st.means[j]) / st.scales[j];
    return out;
}

FeatureVector featurize(const abcd::AbcdFeatures& f, const Standardization& st) {
    return standardize(raw_features(f), st);
}

std::string_view loss_name(LossKind k) { return k == LossKind::Logistic ? "logistic" : "hinge"; }

LossKind loss_from_name(std::string_view name) {
    if (name == "logistic") return LossKind::Logistic;
    if (name == "hinge") return LossKind::Hinge;
    throw InvalidParameter("unknown loss '" + std::string(name) + "' (expected logistic or hinge)");
}

LinearModel LinearModel::zeros(const ClassTaxonomy& taxonomy, std::string id) {
    LinearModel m;
    m.id = std::move(id);
    m.taxonomy = taxonomy;
    m.weights.assign(taxonomy.size() * kFeatureCount, 0.0);
    m.bias.assign(taxonomy.size(), 0.0);
    return m;
}

void LinearModel::validate() const {
    const std::size_t c = taxonomy.size();
    if (c < 2) throw InvalidInput("model taxonomy needs at least two classes");
    if (weights.size() != c * kFeatureCount || bias.size() != c) {
        throw InvalidInput("model parameter shapes do not match the taxonomy");
    }
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(weights.begin(), weights.end(), finite) || !std::all_of(bias.begin(), bias.end(), finite) ||
        !std::all_of(standardization.means.begin(), standardization.means.end(), finite)) {
        throw InvalidInput("model parameters must be finite");
    }
    for (double s : standardization.scales) {
        if (!(s > 0.0) || !std::isfinite(s)) throw InvalidInput("standardization scales must be > 0");
    }
}

Objective evaluate_objective(std::span<const double> params, std::span<const FeatureVector> rows,
                             std::span<const std::size_t> labels, std::size_t n_classes, LossKind loss, double l2) {
    const std::size_t d = kFeatureCount;
    const std::size_t nw = n_classes * d;
    Objective out;
    out.gradient.assign(params.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    std::vector<double> scores(n_classes);

    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& x = rows[i];
        for (std::size_t c = 0; c < n_classes; ++c) {
            double s = params[nw + c];
            for (std::size_t j = 0; j < d; ++j) s += params[c * d + j] * x[j];
            scores[c] = s;
        }
        if (loss == LossKind::Logistic) {
            const auto p = softmax(scores);
            out.loss -= std::log(std::max(p[labels[i]], 1e-300)) * inv_n;
            for (std::size_t c = 0; c < n_classes; ++c) {
                const double r = (p[c] - (c == labels[i] ? 1.0 : 0.0)) * inv_n;
                for (std::size_t j = 0; j < d; ++j) out.gradient[c * d + j] += r * x[j];
                out.gradient[nw + c] += r;
            }
        } else {
            // one-vs-rest squared hinge
            for (std::size_t c = 0; c < n_classes; ++c) {
                const double t = c == labels[i] ? 1.0 : -1.0;
                const double margin = 1.0 - t * scores[c];
                if (margin <= 0.0) continue;
                out.loss += margin * margin * inv_n;
                const double r = -2.0 * margin * t * inv_n;
                for (std::size_t j = 0; j < d; ++j) out.gradient[c * d + j] += r * x[j];
                out.gradient[nw + c] += r;
            }
        }
    }
    for (std::size_t k = 0; k < nw; ++k) {
        out.loss += 0.5 * l2 * params[k] * params[k];
        out.gradient[k] += l2 * params[k];
    }
    return out;
}

LinearModel train(std::span<const LabeledSample> data, const ClassTaxonomy& taxonomy, const TrainParams& params,
                  std::string id) {
    const std::size_t n_classes = taxonomy.size();
    if (n_classes < 2) throw TrainingError("taxonomy must contain at least two classes");
    if (!(params.l2 >= 0.0)) throw TrainingError("l2 coefficient must be >= 0");
    if (params.max_epochs < 1) throw TrainingError("max_epochs must be >= 1");

    std::vector<std::size_t> counts(n_classes, 0);
    for (const auto& s : data) {
        if (s.label >= n_classes) throw TrainingError("sample label out of range for the taxonomy");
        for (double v : s.features) {
            if (!std::isfinite(v)) throw TrainingError("sample features must be finite");
        }
        ++counts[s.label];
    }
    std::size_t present = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        if (counts[c] == 0) continue;
        ++present;
        if (counts[c] < 5) {
            throw TrainingError("class '" + taxonomy.labels[c] + "' has " + std::to_string(counts[c]) +
                                " samples; at least 5 are required");
        }
    }
    if (present < 2) {
        throw TrainingError("training data covers " + std::to_string(present) +
                            " class(es); at least two classes are required");
    }

    std::vector<FeatureVector> raw;
    std::vector<std::size_t> labels;
    raw.reserve(data.size());
    for (const auto& s : data) {
        raw.push_back(s.features);
        labels.push_back(s.label);
    }
    LinearModel model;
    model.id = std::move(id);
    model.taxonomy = taxonomy;
    model.loss_kind = params.loss;
    model.standardization = fit_standardization(raw);
    std::vector<FeatureVector> rows;
    rows.reserve(raw.size());
    for (const auto& r : raw) rows.push_back(standardize(r, model.standardization));

    const std::size_t nw = n_classes * kFeatureCount;
    std::vector<double> theta(nw + n_classes, 0.0);
    std::mt19937_64 rng(params.seed);
    std::normal_distribution<double> init(0.0, 0.01);
    for (std::size_t k = 0; k < nw; ++k) theta[k] = init(rng);

    auto current = evaluate_objective(theta, rows, labels, n_classes, params.loss, params.l2);
    model.training.loss_history.push_back(current.loss);
    double step = 1.0;
    std::vector<double> trial(theta.size());
    int epochs = 0;
    for (; epochs < params.max_epochs; ++epochs) {
        const double g2 = norm2(current.gradient);
        if (std::sqrt(g2) < params.gradient_tolerance) break;
        double t = std::min(step * 2.0, 1e3);
        Objective next;
        bool accepted = false;
        while (t > 1e-16) {
            for (std::size_t k = 0; k < theta.size(); ++k) trial[k] = theta[k] - t * current.gradient[k];
            next = evaluate_objective(trial, rows, labels, n_classes, params.loss, params.l2);
            if (next.loss <= current.loss - 1e-4 * t * g2) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;
        theta.swap(trial);
        current = std::move(next);
        step = t;
        model.training.loss_history.push_back(current.loss);
    }

    model.weights.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(nw));
    model.bias.assign(theta.begin() + static_cast<std::ptrdiff_t>(nw), theta.end());
    model.training.seed = params.seed;
    model.training.l2 = params.l2;
    model.training.epochs = epochs;
    model.training.samples = data.size();
    model.validate();
    return model;
}

Prediction predict(const LinearModel& model, std::span<const double> x) {
    if (x.size() != kFeatureCount) {
        throw InvalidInput("feature vector has " + std::to_string(x.size()) + " entries, expected " +
                           std::to_string(kFeatureCount));
    }
    const std::size_t n = model.taxonomy.size();
    if (model.weights.size() != n * kFeatureCount || model.bias.size() != n) {
        throw InvalidInput("model parameter shapes do not match the taxonomy");
    }
    std::vector<double> scores(n);
    for (std::size_t c = 0; c < n; ++c) {
        double s = model.bias[c];
        for (std::size_t j = 0; j < kFeatureCount; ++j) s += model.weights[c * kFeatureCount + j] * x[j];
        scores[c] = s;
    }
    return Prediction{softmax(scores)};
}

Prediction predict(const LinearModel& model, const abcd::AbcdFeatures& f) {
    const auto x = featurize(f, model.standardization);
    return predict(model, x);
}

LinearModel prior_binary_model() {
    LinearModel m = LinearModel::zeros(ClassTaxonomy::binary(), "abcd-linear-prior-v1");
    m.standardization.means = {15.0, 15.0, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 1.2, 6.0, 5.0};
    m.standardization.scales = {15.0, 15.0, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.2, 3.0, 3.0};
    const FeatureVector direction{0.6, 0.6, 0.15, 0.15, 0.15, 0.15, 0.15, 0.15, 0.8, 0.5, 0.5};
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        m.weights[0 * kFeatureCount + j] = -direction[j] / 2.0;
        m.weights[1 * kFeatureCount + j] = direction[j] / 2.0;
    }
    return m;
}

}  // namespace lesionkit::classify
