#include "lesionkit/feedback.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "lesionkit/providers.hpp"

namespace lesionkit::feedback {

using serialize::Json;

namespace {

std::string iso_now() {
    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[96];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                  tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
    return buf;
}

bool valid_mask_class(const std::string& s) {
    return s == "segmentation" || providers::feature_class_from_name(s).has_value();
}

Vertex parse_vertex(const Json& v, const std::string& path) {
    Vertex out;
    if (v.is_array()) {
        if (v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
            throw InvalidInput(path + ": vertex must be [x, y] numbers");
        }
        out = {v[0].get<double>(), v[1].get<double>()};
    } else if (v.is_object()) {
        out = {serialize::number_at(v, "x", path + "."), serialize::number_at(v, "y", path + ".")};
    } else {
        throw InvalidInput(path + ": vertex must be [x, y] or {\"x\", \"y\"}");
    }
    if (!std::isfinite(out.x) || !std::isfinite(out.y)) throw InvalidInput(path + ": coordinates must be finite");
    return out;
}

}  // namespace

FeedbackRecord parse_submission(const Json& body, const SizeLookup& lookup) {
    if (!body.is_object()) throw InvalidInput("body: must be a JSON object");
    FeedbackRecord r;
    r.image_id = serialize::string_at(body, "image_id", "");
    if (r.image_id.empty()) throw InvalidInput("image_id: must not be empty");
    r.mask_class = serialize::string_at(body, "mask_class", "");
    if (!valid_mask_class(r.mask_class)) {
        throw InvalidInput("mask_class: must be segmentation, globules, streaks, pigment_network, milia_like_cyst or "
                           "negative_network");
    }
    if (body.contains("image_size")) {
        const auto& s = body.at("image_size");
        if (!s.is_array() || s.size() != 2 || !s[0].is_number_integer() || !s[1].is_number_integer() ||
            s[0].get<int>() < 1 || s[1].get<int>() < 1) {
            throw InvalidInput("image_size: must be [width, height] positive integers");
        }
        r.image_width = s[0].get<int>();
        r.image_height = s[1].get<int>();
    } else {
        const auto found = lookup ? lookup(r.image_id) : std::nullopt;
        if (!found) throw InvalidInput("image_size: required when the image is not known to the server");
        r.image_width = found->first;
        r.image_height = found->second;
    }
    if (body.contains("client_timestamp")) {
        r.client_timestamp = serialize::string_at(body, "client_timestamp", "");
    }
    if (!body.contains("regions") || !body.at("regions").is_array()) throw InvalidInput("regions: must be an array");
    const auto& regions = body.at("regions");
    if (regions.empty()) throw InvalidInput("regions: at least one region is required");
    for (std::size_t i = 0; i < regions.size(); ++i) {
        const std::string path = "regions[" + std::to_string(i) + "]";
        const auto& reg = regions[i];
        if (!reg.is_object()) throw InvalidInput(path + ": must be an object");
        Region out;
        const std::string action = serialize::string_at(reg, "action", path + ".");
        if (action == "add") {
            out.action = Action::Add;
        } else if (action == "remove") {
            out.action = Action::Remove;
        } else {
            throw InvalidInput(path + ".action: must be add or remove");
        }
        if (!reg.contains("polygon") || !reg.at("polygon").is_array()) {
            throw InvalidInput(path + ".polygon: must be an array of vertices");
        }
        const auto& poly = reg.at("polygon");
        if (poly.size() < 3) {
            throw InvalidInput(path + ".polygon: needs at least 3 vertices, got " + std::to_string(poly.size()));
        }
        for (std::size_t k = 0; k < poly.size(); ++k) {
            const std::string vpath = path + ".polygon[" + std::to_string(k) + "]";
            const Vertex v = parse_vertex(poly[k], vpath);
            if (v.x < 0 || v.y < 0 || v.x > r.image_width || v.y > r.image_height) {
                throw InvalidInput(vpath + ": outside the " + std::to_string(r.image_width) + "x" +
                                   std::to_string(r.image_height) + " image");
            }
            out.polygon.push_back(v);
        }
        r.regions.push_back(std::move(out));
    }
    return r;
}

Json to_json(const FeedbackRecord& r) {
    Json regions = Json::array();
    for (const auto& reg : r.regions) {
        Json poly = Json::array();
        for (const auto& v : reg.polygon) poly.push_back(Json::array({v.x, v.y}));
        regions.push_back({{"action", reg.action == Action::Add ? "add" : "remove"}, {"polygon", poly}});
    }
    return {
        {"record_id", r.record_id},
        {"image_id", r.image_id},
        {"mask_class", r.mask_class},
        {"image_size", Json::array({r.image_width, r.image_height})},
        {"regions", regions},
        {"client_timestamp", r.client_timestamp},
        {"received_timestamp", r.received_timestamp},
    };
}

FeedbackStore::FeedbackStore(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ifstream in(path_, std::ios::binary);
    if (!in) return;
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    needs_newline_ = !content.empty() && content.back() != '\n';
    std::size_t start = 0;
    while (start < content.size()) {
        auto end = content.find('\n', start);
        if (end == std::string::npos) end = content.size();
        const std::string line = content.substr(start, end - start);
        start = end + 1;
        if (line.empty()) continue;
        try {
            const auto j = Json::parse(line);
            lines_[j.at("record_id").get<std::string>()] = line;
        } catch (const std::exception&) {
            // torn tail from an interrupted write; later appends start on a fresh line
        }
    }
}

std::string FeedbackStore::append(FeedbackRecord record) {
    std::lock_guard lock(mu_);
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    char id[24];
    do {
        std::snprintf(id, sizeof id, "fb-%016llx", static_cast<unsigned long long>(rng()));
    } while (lines_.count(id));
    record.record_id = id;
    record.received_timestamp = iso_now();
    const std::string line = to_json(record).dump();
    std::string payload = (needs_newline_ ? "\n" : "") + line + "\n";

    const int fd = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) throw Error("cannot open feedback store: " + std::string(std::strerror(errno)));
    std::size_t off = 0;
    while (off < payload.size()) {
        const ssize_t n = ::write(fd, payload.data() + off, payload.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            const std::string msg = std::strerror(errno);
            ::close(fd);
            throw Error("feedback write failed: " + msg);
        }
        off += static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0) {
        const std::string msg = std::strerror(errno);
        ::close(fd);
        throw Error("feedback fsync failed: " + msg);
    }
    ::close(fd);
    needs_newline_ = false;
    lines_[record.record_id] = line;
    return record.record_id;
}

std::optional<Json> FeedbackStore::get(const std::string& record_id) const {
    std::lock_guard lock(mu_);
    const auto it = lines_.find(record_id);
    if (it == lines_.end()) return std::nullopt;
    return Json::parse(it->second);
}

std::size_t FeedbackStore::size() const {
    std::lock_guard lock(mu_);
    return lines_.size();
}

}  // namespace lesionkit::feedback
