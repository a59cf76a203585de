#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lesionkit/serialize.hpp"

namespace lesionkit::feedback {

enum class Action { Add, Remove };

struct Vertex {
    double x = 0.0;
    double y = 0.0;
};

struct Region {
    std::vector<Vertex> polygon;
    Action action = Action::Add;
};

struct FeedbackRecord {
    std::string record_id;
    std::string image_id;
    std::string mask_class;  // a feature class name or "segmentation"
    int image_width = 0;
    int image_height = 0;
    std::vector<Region> regions;
    std::string client_timestamp;
    std::string received_timestamp;
};

using SizeLookup = std::function<std::optional<std::pair<int, int>>(const std::string& image_id)>;

/// Validates a submission body. Errors are InvalidInput whose message starts
/// with the offending field path, e.g. "regions[1].polygon: ...".
FeedbackRecord parse_submission(const serialize::Json& body, const SizeLookup& lookup = {});

serialize::Json to_json(const FeedbackRecord& r);

/// Append-only JSON-lines file; every record is fsync'ed before append returns.
class FeedbackStore {
public:
    explicit FeedbackStore(std::filesystem::path path);

    /// Assigns record_id and received_timestamp, persists, returns the id.
    std::string append(FeedbackRecord record);
    std::optional<serialize::Json> get(const std::string& record_id) const;
    std::size_t size() const;
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    mutable std::mutex mu_;
    std::map<std::string, std::string> lines_;  // id -> stored line
    bool needs_newline_ = false;
};

}  // namespace lesionkit::feedback
