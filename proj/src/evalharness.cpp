#include "lesionkit/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <optional>
#include <thread>

#include "lesionkit/errors.hpp"

namespace lesionkit::eval {

std::string_view truth_name(Truth t) { return t == Truth::Malignant ? "malignant" : "benign"; }

Truth truth_from_name(std::string_view name) {
    if (name == "benign") return Truth::Benign;
    if (name == "malignant" || name == "malign") return Truth::Malignant;
    throw InvalidInput("unknown label '" + std::string(name) + "' (expected benign or malignant)");
}

ScoredDataset score_dataset(const std::vector<std::string>& benign, const std::vector<std::string>& malignant,
                            const Scorer& scorer, int threads) {
    if (benign.empty()) throw EvaluationError("benign set is empty");
    if (malignant.empty()) throw EvaluationError("malignant set is empty");
    if (!scorer) throw InvalidParameter("no scorer supplied");

    struct Job {
        const std::string* id;
        Truth truth;
    };
    std::vector<Job> jobs;
    for (const auto& id : benign) jobs.push_back({&id, Truth::Benign});
    for (const auto& id : malignant) jobs.push_back({&id, Truth::Malignant});

    std::vector<std::optional<double>> results(jobs.size());
    std::vector<std::string> errors(jobs.size());
    auto work = [&](std::size_t i) {
        try {
            const double s = scorer(*jobs[i].id);
            if (!std::isfinite(s) || s < 0.0 || s > 1.0) {
                errors[i] = "score " + std::to_string(s) + " outside [0, 1]";
            } else {
                results[i] = s;
            }
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    };
    const int n_workers = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
    if (n_workers == 1) {
        for (std::size_t i = 0; i < jobs.size(); ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < jobs.size(); i = next++) work(i);
            });
        }
        for (auto& t : pool) t.join();
    }

    ScoredDataset out;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (results[i]) {
            out.scores.push_back({*jobs[i].id, jobs[i].truth, *results[i]});
        } else {
            out.failures.push_back({*jobs[i].id, jobs[i].truth, errors[i]});
        }
    }
    if (out.scores.empty()) {
        throw EvaluationError("all " + std::to_string(jobs.size()) + " items failed; first error: " +
                              out.failures.front().error);
    }
    return out;
}

std::vector<double> default_thresholds() {
    std::vector<double> t;
    for (int i = 0; i <= 100; ++i) t.push_back(i / 100.0);
    return t;
}

ThresholdRow confusion_at(const std::vector<LabeledScore>& scores, double t) {
    ThresholdRow r;
    r.t = t;
    for (const auto& s : scores) {
        const bool pos = s.score >= t;
        if (s.truth == Truth::Malignant) {
            (pos ? r.tp : r.fn)++;
        } else {
            (pos ? r.fp : r.tn)++;
        }
    }
    auto ratio = [&](const char* name, double num, double den) {
        if (den == 0.0) {
            r.undefined.emplace_back(name);
            return 0.0;
        }
        return num / den;
    };
    r.precision = ratio("precision", r.tp, r.tp + r.fp);
    r.recall = ratio("recall", r.tp, r.tp + r.fn);
    r.specificity = ratio("specificity", r.tn, r.tn + r.fp);
    r.accuracy = ratio("accuracy", r.tp + r.tn, r.tp + r.tn + r.fp + r.fn);
    r.f1 = ratio("f1", 2.0 * r.tp, 2.0 * r.tp + r.fp + r.fn);
    r.fpr = ratio("fpr", r.fp, r.fp + r.tn);
    r.tpr = r.recall;
    if (r.tp + r.fn == 0) r.undefined.emplace_back("tpr");
    return r;
}

std::vector<CurvePoint> exact_roc(const std::vector<LabeledScore>& scores) {
    std::vector<LabeledScore> sorted = scores;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
    long pos = 0, neg = 0;
    for (const auto& s : scores) (s.truth == Truth::Malignant ? pos : neg)++;
    std::vector<CurvePoint> pts{{0.0, 0.0}};
    long tp = 0, fp = 0;
    for (std::size_t i = 0; i < sorted.size();) {
        const double v = sorted[i].score;
        for (; i < sorted.size() && sorted[i].score == v; ++i) {
            (sorted[i].truth == Truth::Malignant ? tp : fp)++;
        }
        pts.push_back({neg ? static_cast<double>(fp) / neg : 0.0, pos ? static_cast<double>(tp) / pos : 0.0});
    }
    if (pts.back() != CurvePoint{1.0, 1.0}) pts.push_back({1.0, 1.0});
    return pts;
}

double roc_auc(std::vector<CurvePoint> pts) {
    const bool has_origin = std::any_of(pts.begin(), pts.end(), [](const auto& p) { return p == CurvePoint{0, 0}; });
    const bool has_corner = std::any_of(pts.begin(), pts.end(), [](const auto& p) { return p == CurvePoint{1, 1}; });
    if (!has_origin) pts.push_back({0.0, 0.0});
    if (!has_corner) pts.push_back({1.0, 1.0});
    std::stable_sort(pts.begin(), pts.end(),
                     [](const auto& a, const auto& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    double area = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        area += (pts[i].x - pts[i - 1].x) * (pts[i].y + pts[i - 1].y) / 2.0;
    }
    return area;
}

EvalReport sweep(const std::vector<LabeledScore>& scores, const std::vector<double>& thresholds) {
    if (scores.empty()) throw EvaluationError("no scored items to evaluate");
    if (thresholds.empty()) throw InvalidParameter("threshold list is empty");
    for (const auto& s : scores) {
        if (!std::isfinite(s.score) || s.score < 0.0 || s.score > 1.0) {
            throw InvalidInput("score for '" + s.item_id + "' outside [0, 1]");
        }
    }
    std::vector<double> ts = thresholds;
    std::sort(ts.begin(), ts.end());

    EvalReport rep;
    rep.n_items = scores.size();
    for (const auto& s : scores) (s.truth == Truth::Malignant ? rep.n_malignant : rep.n_benign)++;
    for (double t : ts) rep.per_threshold.push_back(confusion_at(scores, t));
    for (auto it = rep.per_threshold.rbegin(); it != rep.per_threshold.rend(); ++it) {
        rep.roc_points.push_back({it->fpr, it->tpr});
        rep.pr_points.push_back({it->recall, it->precision});
    }
    rep.grid_roc_auc = roc_auc(rep.roc_points);
    rep.roc_auc = roc_auc(exact_roc(scores));
    return rep;
}

std::string to_csv(const EvalReport& report) {
    std::string out = "threshold,tp,fp,tn,fn,precision,recall,specificity,accuracy,f1,fpr,tpr\n";
    char buf[256];
    for (const auto& r : report.per_threshold) {
        std::snprintf(buf, sizeof buf, "%.2f,%ld,%ld,%ld,%ld,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.t, r.tp, r.fp,
                      r.tn, r.fn, r.precision, r.recall, r.specificity, r.accuracy, r.f1, r.fpr, r.tpr);
        out += buf;
    }
    return out;
}

}  // namespace lesionkit::eval
