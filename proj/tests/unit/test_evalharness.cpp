#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "lesionkit/errors.hpp"
#include "lesionkit/evalharness.hpp"

using namespace lesionkit;
using namespace lesionkit::eval;

namespace {

std::vector<LabeledScore> make(const std::vector<double>& benign, const std::vector<double>& malignant) {
    std::vector<LabeledScore> out;
    int i = 0;
    for (double s : benign) out.push_back({"b" + std::to_string(i++), Truth::Benign, s});
    for (double s : malignant) out.push_back({"m" + std::to_string(i++), Truth::Malignant, s});
    return out;
}

// Mann-Whitney probability that a malignant score beats a benign one, ties count half.
double pairwise_auc(const std::vector<LabeledScore>& s) {
    double wins = 0;
    long pairs = 0;
    for (const auto& a : s) {
        if (a.truth != Truth::Malignant) continue;
        for (const auto& b : s) {
            if (b.truth != Truth::Benign) continue;
            ++pairs;
            wins += a.score > b.score ? 1.0 : a.score == b.score ? 0.5 : 0.0;
        }
    }
    return wins / pairs;
}

}  // namespace

TEST_CASE("four-item hand confusion") {
    // at t=0.5: m 0.9 -> TP, b 0.6 -> FP, b 0.2 -> TN, m 0.3 -> FN
    const auto s = make({0.6, 0.2}, {0.9, 0.3});
    const auto r = confusion_at(s, 0.5);
    CHECK(r.tp == 1);
    CHECK(r.fp == 1);
    CHECK(r.tn == 1);
    CHECK(r.fn == 1);
    CHECK(r.precision == 0.5);
    CHECK(r.recall == 0.5);
    CHECK(r.accuracy == 0.5);
    CHECK(r.f1 == 0.5);
    CHECK(r.specificity == 0.5);
    CHECK(r.undefined.empty());
}

TEST_CASE("threshold boundary uses >=") {
    const auto s = make({0.5}, {0.5});
    const auto r = confusion_at(s, 0.5);
    CHECK(r.tp == 1);
    CHECK(r.fp == 1);
}

TEST_CASE("perfect separation") {
    const auto s = make({0.05, 0.1, 0.2, 0.29}, {0.71, 0.8, 0.95});
    const auto rep = sweep(s);
    const auto& mid = rep.per_threshold[50];
    CHECK(mid.t == 0.5);
    CHECK(mid.precision == 1.0);
    CHECK(mid.recall == 1.0);
    CHECK(mid.accuracy == 1.0);
    CHECK(mid.fpr == 0.0);
    CHECK(rep.roc_auc == 1.0);
    CHECK(rep.grid_roc_auc == 1.0);

    const auto& first = rep.per_threshold.front();
    CHECK(first.t == 0.0);
    CHECK(first.recall == 1.0);
    CHECK(first.specificity == 0.0);
}

TEST_CASE("grid shape and invariants") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> b, m;
    for (int i = 0; i < 60; ++i) b.push_back(u(rng) * 0.8);
    for (int i = 0; i < 40; ++i) m.push_back(0.2 + u(rng) * 0.8);
    const auto s = make(b, m);
    const auto rep = sweep(s);
    REQUIRE(rep.per_threshold.size() == 101);
    CHECK(rep.n_items == 100);
    CHECK(rep.n_benign == 60);
    CHECK(rep.n_malignant == 40);
    for (std::size_t i = 0; i < rep.per_threshold.size(); ++i) {
        const auto& r = rep.per_threshold[i];
        CHECK(r.t == doctest::Approx(i / 100.0).epsilon(1e-15));
        CHECK(r.tp + r.fp + r.tn + r.fn == 100);
        // independent formula path
        const double P = r.tp + r.fn, N = r.fp + r.tn;
        CHECK(r.recall == doctest::Approx(P ? r.tp / P : 0));
        CHECK(r.fpr == doctest::Approx(N ? r.fp / N : 0));
        CHECK(r.specificity == doctest::Approx(N ? 1.0 - r.fp / N : 0));
        CHECK(r.accuracy == doctest::Approx((r.tp + r.tn) / 100.0));
        const double pr = r.tp + r.fp ? double(r.tp) / (r.tp + r.fp) : 0.0;
        const double f1 = pr + r.recall > 0 ? 2 * pr * r.recall / (pr + r.recall) : 0.0;
        CHECK(r.precision == doctest::Approx(pr));
        CHECK(r.f1 == doctest::Approx(f1));
        if (i > 0) {
            CHECK(r.recall <= rep.per_threshold[i - 1].recall);
            CHECK(r.specificity >= rep.per_threshold[i - 1].specificity);
        }
    }
    REQUIRE(rep.roc_points.size() == 101);
    for (std::size_t i = 1; i < rep.roc_points.size(); ++i) {
        CHECK(rep.roc_points[i].x >= rep.roc_points[i - 1].x);
        CHECK(rep.roc_points[i].y >= rep.roc_points[i - 1].y);
    }
    CHECK(rep.roc_points.back() == CurvePoint{1, 1});
    CHECK(rep.roc_auc == doctest::Approx(pairwise_auc(s)).epsilon(1e-12));
}

TEST_CASE("undefined ratios are flagged") {
    const auto s = make({0.2, 0.3}, {0.4});
    const auto r = confusion_at(s, 0.9);
    CHECK(r.precision == 0.0);
    CHECK(std::find(r.undefined.begin(), r.undefined.end(), "precision") != r.undefined.end());
    const auto only_benign = make({0.1}, {});
    const auto q = confusion_at(only_benign, 0.5);
    CHECK(std::find(q.undefined.begin(), q.undefined.end(), "recall") != q.undefined.end());
    CHECK(std::isfinite(q.f1));
}

TEST_CASE("roc_auc trapezoid") {
    CHECK(roc_auc({}) == 0.5);
    CHECK(roc_auc({{0, 0}, {1, 1}}) == 0.5);
    CHECK(roc_auc({{0, 1}}) == 1.0);
    CHECK(roc_auc({{0.5, 0.5}}) == 0.5);
    CHECK(roc_auc({{0.25, 0.75}, {0.5, 1.0}}) == doctest::Approx(0.25 * 0.375 + 0.25 * 0.875 + 0.5));
}

TEST_CASE("label-independent scores give chance AUC") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<LabeledScore> s;
    for (int i = 0; i < 2000; ++i) {
        s.push_back({std::to_string(i), i % 2 ? Truth::Malignant : Truth::Benign, u(rng)});
    }
    const auto rep = sweep(s);
    CHECK(std::abs(rep.roc_auc - 0.5) < 0.05);
    CHECK(std::abs(rep.grid_roc_auc - 0.5) < 0.05);
}

TEST_CASE("auc invariant under monotone transforms") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<LabeledScore> s;
    for (int i = 0; i < 300; ++i) {
        const bool mal = i % 3 == 0;
        s.push_back({std::to_string(i), mal ? Truth::Malignant : Truth::Benign, std::min(1.0, u(rng) * (mal ? 1.3 : 1.0))});
    }
    const double base = sweep(s).roc_auc;
    auto t = s;
    for (auto& x : t) x.score = std::pow(x.score, 3.0);
    CHECK(sweep(t).roc_auc == doctest::Approx(base).epsilon(1e-12));
    for (auto& x : t) x.score = std::sqrt(std::sqrt(x.score)) * 0.5;
    CHECK(sweep(t).roc_auc == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("score_dataset") {
    std::map<std::string, double> table{{"a", 0.1}, {"b", 0.2}, {"c", 0.9}, {"d", 0.8}};
    auto scorer = [&](const std::string& id) {
        if (id == "bad") throw std::runtime_error("cannot decode");
        if (id == "nan") return std::nan("");
        return table.at(id);
    };
    CHECK_THROWS_AS(score_dataset({}, {"c"}, scorer), EvaluationError);
    CHECK_THROWS_AS(score_dataset({"a"}, {}, scorer), EvaluationError);
    CHECK_THROWS_AS(score_dataset({"bad"}, {"bad"}, scorer), EvaluationError);

    const auto d = score_dataset({"a", "bad", "b"}, {"c", "nan", "d"}, scorer, 3);
    REQUIRE(d.scores.size() == 4);
    CHECK(d.scores[0].item_id == "a");
    CHECK(d.scores[2].truth == Truth::Malignant);
    CHECK(d.scores[3].score == 0.8);
    REQUIRE(d.failures.size() == 2);
    CHECK(d.failures[0].error == "cannot decode");
    CHECK(d.failures[1].item_id == "nan");

    const auto half = score_dataset({"a", "b"}, {"c", "d"}, [](const std::string&) { return 0.5; });
    for (const auto& s : half.scores) CHECK(s.score == 0.5);
}

TEST_CASE("csv export") {
    const auto csv = to_csv(sweep(make({0.2}, {0.8})));
    CHECK(csv.rfind("threshold,tp,fp,tn,fn", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 102);
}
