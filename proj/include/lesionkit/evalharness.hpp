#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace lesionkit::eval {

enum class Truth { Benign, Malignant };
std::string_view truth_name(Truth t);
Truth truth_from_name(std::string_view name);

struct LabeledScore {
    std::string item_id;
    Truth truth = Truth::Benign;
    double score = 0.0;  // malignancy probability
};

struct ItemFailure {
    std::string item_id;
    Truth truth = Truth::Benign;
    std::string error;
};

struct ScoredDataset {
    std::vector<LabeledScore> scores;
    std::vector<ItemFailure> failures;
};

/// Returns p_malignant for one item; may throw, which is recorded per item.
using Scorer = std::function<double(const std::string& item_id)>;

/// Scores benign then malignant items in input order. Throws EvaluationError
/// if either set is empty or every item failed.
ScoredDataset score_dataset(const std::vector<std::string>& benign, const std::vector<std::string>& malignant,
                            const Scorer& scorer, int threads = 1);

struct ThresholdRow {
    double t = 0.0;
    long tp = 0, fp = 0, tn = 0, fn = 0;
    double precision = 0, recall = 0, specificity = 0, accuracy = 0, f1 = 0, fpr = 0, tpr = 0;
    std::vector<std::string> undefined;  // metrics whose ratio was 0/0, reported as 0
};

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const CurvePoint&) const = default;
};

struct EvalReport {
    std::vector<ThresholdRow> per_threshold;  // ascending t
    std::vector<CurvePoint> roc_points;       // (fpr, tpr), descending t
    std::vector<CurvePoint> pr_points;        // (recall, precision), descending t
    double roc_auc = 0.0;                     // exact, over every distinct score
    double grid_roc_auc = 0.0;                // trapezoid over the threshold grid
    std::size_t n_items = 0;
    std::size_t n_benign = 0;
    std::size_t n_malignant = 0;
    std::vector<ItemFailure> failures;
};

/// 0.00, 0.01, ..., 1.00
std::vector<double> default_thresholds();

/// Malignant iff score >= t.
ThresholdRow confusion_at(const std::vector<LabeledScore>& scores, double t);

EvalReport sweep(const std::vector<LabeledScore>& scores, const std::vector<double>& thresholds = default_thresholds());

/// ROC through every distinct score plus both corners.
std::vector<CurvePoint> exact_roc(const std::vector<LabeledScore>& scores);

/// Trapezoid over fpr-sorted points; (0,0) and (1,1) appended when absent.
double roc_auc(std::vector<CurvePoint> roc_points);

std::string to_csv(const EvalReport& report);

}  // namespace lesionkit::eval
