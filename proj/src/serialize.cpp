#include "lesionkit/serialize.hpp"

#include <fstream>
#include <sstream>

#include "lesionkit/codec.hpp"

namespace lesionkit::serialize {

namespace {

Json point_json(const geometry::Point& p) { return Json::array({p.x, p.y}); }

}  // namespace

Json features_json(const abcd::AbcdFeatures& f) {
    Json distances = Json::object();
    for (auto c : abcd::kAllColors) {
        distances[std::string(abcd::color_name(c))] = f.centroid_distances[static_cast<std::size_t>(c)];
    }
    Json params = Json::array();
    for (double v : f.asymmetry_parameters()) params.push_back(v);
    Json present = Json::array();
    for (auto c : f.colors_present) present.push_back(abcd::color_name(c));
    Json regions = Json::array();
    for (const auto& r : f.color_regions) {
        regions.push_back({{"color", abcd::color_name(r.color)},
                           {"area", r.area},
                           {"centroid", point_json(r.weighted_centroid)}});
    }
    return {
        {"asymmetry",
         {{"vertical_pct", f.asym_vertical_pct},
          {"horizontal_pct", f.asym_horizontal_pct},
          {"centroid_distances", distances},
          {"parameters", params}}},
        {"border", {{"irregularity_index", f.irregularity_index}}},
        {"diameter",
         {{"horizontal_mm", f.diameter_h_mm},
          {"vertical_mm", f.diameter_v_mm},
          {"rect_major_px", f.rect_major_px},
          {"rect_minor_px", f.rect_minor_px},
          {"tilt_deg", f.tilt_deg}}},
        {"colors", {{"present", present}, {"regions", regions}}},
        {"centroid", point_json(f.centroid)},
        {"mm_per_pixel", f.mm_per_pixel},
    };
}

Json scores_json(const abcd::DisplayScores& s) {
    return {{"A1", s.a1}, {"A2", s.a2}, {"B", s.b}, {"D1", s.d1}, {"D2", s.d2}};
}

Json abcd_response(const std::string& filename, const std::string& image_id, const RasterImage& img,
                   const abcd::AbcdFeatures& f, const abcd::DisplayScores& s, const OverlayUrls& overlays) {
    return {
        {"filename", filename},
        {"image_id", image_id},
        {"image_size", Json::array({img.width(), img.height()})},
        {"mm_per_pixel", f.mm_per_pixel},
        {"features", features_json(f)},
        {"scores", scores_json(s)},
        {"overlays",
         {{"mask", overlays.mask},
          {"segmentation", overlays.segmentation},
          {"colors", overlays.colors},
          {"asymmetry", overlays.asymmetry}}},
    };
}

Json confidence_response(const std::string& filename, const std::string& model_id,
                         const classify::ClassTaxonomy& taxonomy, const classify::Prediction& pred) {
    const auto report = classify::confidence(pred, taxonomy);
    Json entries = Json::array();
    for (const auto& e : report.entries) {
        entries.push_back({{"label", e.label},
                           {"long_label", classify::long_label(e.label)},
                           {"index", e.index},
                           {"p", e.p},
                           {"confidence_pct", e.confidence_pct}});
    }
    Json out = {
        {"filename", filename},
        {"model", model_id},
        {"taxonomy", taxonomy.name()},
        {"labels", taxonomy.labels},
        {"prediction", pred.probs},
        {"uniform_threshold", report.uniform_threshold},
        {"entries", entries},
    };
    if (taxonomy.kind == classify::TaxonomyKind::Binary) {
        const auto c = classify::malignancy_color(pred, taxonomy);
        out["malignancy_color"] = {{"rgb", Json::array({c.rgb.r, c.rgb.g, c.rgb.b})}, {"hex", c.hex}};
    }
    return out;
}

Json binary_response(const std::string& filename, const classify::Prediction& pred) {
    return {{"filename", filename}, {"prediction", pred.probs}};
}

Json eval_report_json(const eval::EvalReport& report, const std::vector<eval::LabeledScore>& items) {
    Json rows = Json::array();
    for (const auto& r : report.per_threshold) {
        rows.push_back({{"t", r.t},
                        {"tp", r.tp},
                        {"fp", r.fp},
                        {"tn", r.tn},
                        {"fn", r.fn},
                        {"precision", r.precision},
                        {"recall", r.recall},
                        {"specificity", r.specificity},
                        {"accuracy", r.accuracy},
                        {"f1", r.f1},
                        {"fpr", r.fpr},
                        {"tpr", r.tpr},
                        {"undefined", r.undefined}});
    }
    auto curve = [](const std::vector<eval::CurvePoint>& pts) {
        Json a = Json::array();
        for (const auto& p : pts) a.push_back(Json::array({p.x, p.y}));
        return a;
    };
    Json scored = Json::array();
    for (const auto& s : items) {
        scored.push_back({{"id", s.item_id}, {"truth", eval::truth_name(s.truth)}, {"score", s.score}});
    }
    Json failures = Json::array();
    for (const auto& f : report.failures) {
        failures.push_back({{"id", f.item_id}, {"truth", eval::truth_name(f.truth)}, {"error", f.error}});
    }
    return {
        {"n_items", report.n_items},
        {"n_benign", report.n_benign},
        {"n_malignant", report.n_malignant},
        {"decision_rule", "malignant iff score >= t"},
        {"roc_auc", report.roc_auc},
        {"grid_roc_auc", report.grid_roc_auc},
        {"per_threshold", rows},
        {"roc_points", curve(report.roc_points)},
        {"pr_points", curve(report.pr_points)},
        {"items", scored},
        {"failures", failures},
    };
}

Json model_to_json(const classify::LinearModel& m) {
    Json weights = Json::array();
    const std::size_t n = m.taxonomy.size();
    for (std::size_t c = 0; c < n; ++c) {
        weights.push_back(std::vector<double>(m.weights.begin() + static_cast<std::ptrdiff_t>(c * classify::kFeatureCount),
                                              m.weights.begin() + static_cast<std::ptrdiff_t>((c + 1) * classify::kFeatureCount)));
    }
    Json names = Json::array();
    for (auto s : classify::feature_names()) names.push_back(s);
    return {
        {"format", kModelFormat},
        {"version", kModelFormatVersion},
        {"id", m.id},
        {"taxonomy", m.taxonomy.name()},
        {"labels", m.taxonomy.labels},
        {"loss", classify::loss_name(m.loss_kind)},
        {"feature_names", names},
        {"weights", weights},
        {"bias", m.bias},
        {"standardization", {{"means", m.standardization.means}, {"scales", m.standardization.scales}}},
        {"training",
         {{"seed", m.training.seed},
          {"l2", m.training.l2},
          {"epochs", m.training.epochs},
          {"samples", m.training.samples},
          {"loss_history", m.training.loss_history}}},
    };
}

classify::LinearModel model_from_json(const Json& j) {
    try {
        if (j.value("format", std::string()) != kModelFormat) throw InvalidInput("not a lesionkit model file");
        if (j.at("version").get<int>() != kModelFormatVersion) {
            throw InvalidInput("unsupported model version " + j.at("version").dump());
        }
        classify::LinearModel m;
        m.id = j.at("id").get<std::string>();
        m.taxonomy = classify::ClassTaxonomy::from_name(j.at("taxonomy").get<std::string>());
        if (j.contains("labels") && j.at("labels").get<std::vector<std::string>>() != m.taxonomy.labels) {
            throw InvalidInput("model labels do not match the " + std::string(m.taxonomy.name()) + " taxonomy");
        }
        m.loss_kind = classify::loss_from_name(j.value("loss", std::string("logistic")));
        for (const auto& row : j.at("weights")) {
            const auto r = row.get<std::vector<double>>();
            if (r.size() != classify::kFeatureCount) throw InvalidInput("model weight row has wrong length");
            m.weights.insert(m.weights.end(), r.begin(), r.end());
        }
        m.bias = j.at("bias").get<std::vector<double>>();
        const auto& st = j.at("standardization");
        const auto means = st.at("means").get<std::vector<double>>();
        const auto scales = st.at("scales").get<std::vector<double>>();
        if (means.size() != classify::kFeatureCount || scales.size() != classify::kFeatureCount) {
            throw InvalidInput("standardization vectors have wrong length");
        }
        std::copy(means.begin(), means.end(), m.standardization.means.begin());
        std::copy(scales.begin(), scales.end(), m.standardization.scales.begin());
        if (j.contains("training")) {
            const auto& t = j.at("training");
            m.training.seed = t.value("seed", std::uint64_t{0});
            m.training.l2 = t.value("l2", 0.0);
            m.training.epochs = t.value("epochs", 0);
            m.training.samples = t.value("samples", std::size_t{0});
            m.training.loss_history = t.value("loss_history", std::vector<double>{});
        }
        m.validate();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed model file: ") + e.what());
    }
}

classify::LinearModel load_model(const std::filesystem::path& path) {
    const auto bytes = codec::read_file(path);
    return model_from_json(parse(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                                 path.string()));
}

void save_model(const classify::LinearModel& m, const std::filesystem::path& path) {
    const std::string text = model_to_json(m).dump(2) + "\n";
    codec::write_file(path, codec::as_bytes(text));
}

Json rise_params_json(const explain::RiseParams& p) {
    return {{"n_masks", p.n_masks},
            {"grid_cells", p.grid_cells},
            {"p_on", p.p_on},
            {"target_class", p.target_class},
            {"seed", p.seed}};
}

Json segmentation_config_json(const segmentation::SegmentationConfig& c) {
    return {{"kernel_size", c.preprocess.kernel_size},
            {"sigma", c.preprocess.sigma},
            {"working_max_side", c.preprocess.working_max_side},
            {"lambda_in", c.chan_vese.lambda_inside},
            {"lambda_out", c.chan_vese.lambda_outside},
            {"mu", c.chan_vese.mu},
            {"max_iters", c.chan_vese.max_iters},
            {"margin_fraction", c.chan_vese.margin_fraction}};
}

double number_at(const Json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) throw InvalidInput(path + key + ": required");
    if (!j.at(key).is_number()) throw InvalidInput(path + key + ": must be a number");
    return j.at(key).get<double>();
}

std::string string_at(const Json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) throw InvalidInput(path + key + ": required");
    if (!j.at(key).is_string()) throw InvalidInput(path + key + ": must be a string");
    return j.at(key).get<std::string>();
}

Json parse(std::string_view text, const std::string& what) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidInput("invalid JSON in " + what + ": " + e.what());
    }
}

}  // namespace lesionkit::serialize
