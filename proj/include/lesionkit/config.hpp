#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "lesionkit/abcd.hpp"
#include "lesionkit/explain.hpp"
#include "lesionkit/providers.hpp"
#include "lesionkit/segmentation.hpp"
#include "lesionkit/serialize.hpp"

namespace lesionkit::config {

/// "builtin:prior" selects the hand-set binary prior model.
inline constexpr const char* kBuiltinPrior = "builtin:prior";

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 5000;
    std::filesystem::path static_root = "html";
    std::filesystem::path feedback_store = "data/feedback.jsonl";
    std::filesystem::path data_root = ".";  // base for manifest paths in /evaluate
    std::string binary_model = kBuiltinPrior;
    std::optional<std::filesystem::path> multi8_model;
    std::string classifier_provider;  // empty: the binary model's id
    std::string segmenter_provider = "chan-vese";
    std::string feature_mask_provider = "heuristic-dog";
    std::map<providers::FeatureClass, std::string> feature_class_providers;
    providers::FeatureBands feature_bands = providers::default_feature_bands();
    segmentation::SegmentationConfig segmentation;
    explain::RiseParams rise;
    int rise_max_masks = 5000;
    int explain_max_side = 256;  // RISE runs on a copy downscaled to this side
    double mm_per_pixel = abcd::kDefaultMmPerPixel;
    std::size_t cache_mb = 256;
    int evaluate_async_threshold = 50;
    int worker_threads = 4;
    std::filesystem::path source;  // file this config came from, empty if defaults

    /// Throws InvalidInput on out-of-range values or missing referenced paths.
    void validate() const;
};

/// Relative paths resolve against `base_dir`. Unknown keys are rejected.
ServiceConfig from_json(const serialize::Json& j, const std::filesystem::path& base_dir);
ServiceConfig load(const std::filesystem::path& path);
serialize::Json to_json(const ServiceConfig& c);

}  // namespace lesionkit::config
