#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "lesionkit/abcd.hpp"
#include "lesionkit/classify.hpp"
#include "lesionkit/evalharness.hpp"
#include "lesionkit/explain.hpp"
#include "lesionkit/segmentation.hpp"

namespace lesionkit::serialize {

using Json = nlohmann::ordered_json;

inline constexpr const char* kModelFormat = "lesionkit-linear-model";
inline constexpr int kModelFormatVersion = 1;

Json features_json(const abcd::AbcdFeatures& f);
Json scores_json(const abcd::DisplayScores& s);

struct OverlayUrls {
    std::string mask;
    std::string segmentation;
    std::string colors;
    std::string asymmetry;
};

/// Body of /features/abcd.
Json abcd_response(const std::string& filename, const std::string& image_id, const RasterImage& img,
                   const abcd::AbcdFeatures& f, const abcd::DisplayScores& s, const OverlayUrls& overlays);

/// Body of /classify/confidence.
Json confidence_response(const std::string& filename, const std::string& model_id,
                         const classify::ClassTaxonomy& taxonomy, const classify::Prediction& pred);

/// Body of /classify/binary.
Json binary_response(const std::string& filename, const classify::Prediction& pred);

Json eval_report_json(const eval::EvalReport& report, const std::vector<eval::LabeledScore>& items);

Json model_to_json(const classify::LinearModel& m);
classify::LinearModel model_from_json(const Json& j);
classify::LinearModel load_model(const std::filesystem::path& path);
void save_model(const classify::LinearModel& m, const std::filesystem::path& path);

Json rise_params_json(const explain::RiseParams& p);
Json segmentation_config_json(const segmentation::SegmentationConfig& c);

/// Typed field access with InvalidInput naming the offending path.
double number_at(const Json& j, const std::string& key, const std::string& path);
std::string string_at(const Json& j, const std::string& key, const std::string& path);

Json parse(std::string_view text, const std::string& what);

}  // namespace lesionkit::serialize
