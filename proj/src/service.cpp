#include "lesionkit/service.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <fstream>
#include <list>
#include <mutex>
#include <optional>
#include <thread>
#include <unordered_map>

#include <httplib.h>

#include "lesionkit/archive.hpp"
#include "lesionkit/codec.hpp"
#include "lesionkit/evalharness.hpp"
#include "lesionkit/explain.hpp"
#include "lesionkit/feedback.hpp"
#include "lesionkit/imaging.hpp"
#include "lesionkit/pipeline.hpp"

namespace lesionkit::service {

namespace fs = std::filesystem;
using serialize::Json;

abcd::AbcdConfig Engine::abcd_config(double mm_per_pixel) const {
    abcd::AbcdConfig c;
    c.mm_per_pixel = mm_per_pixel;
    return c;
}

std::shared_ptr<const Engine> build_engine(const config::ServiceConfig& cfg) {
    cfg.validate();
    auto e = std::make_shared<Engine>();
    e->config = cfg;

    providers::ProviderDescriptor seg;
    seg.id = pipeline::kChanVeseSegmenterId;
    auto segmenter = pipeline::chan_vese_segmenter(cfg.segmentation);
    e->registry.register_segmenter(seg, segmenter);

    providers::ProviderDescriptor fm;
    fm.id = pipeline::kHeuristicFeatureMaskId;
    fm.heuristic = true;
    e->registry.register_feature_mask(fm, pipeline::heuristic_feature_masks(cfg.feature_bands));

    auto register_model = [&](std::shared_ptr<const classify::LinearModel> m) {
        providers::ProviderDescriptor d;
        d.id = m->id;
        d.taxonomy = m->taxonomy;
        d.capabilities.batch = false;
        e->registry.register_classifier(d, pipeline::linear_classifier(m, segmenter, e->abcd_config(cfg.mm_per_pixel)));
    };
    if (cfg.binary_model == config::kBuiltinPrior) {
        e->binary_model = std::make_shared<const classify::LinearModel>(classify::prior_binary_model());
    } else {
        e->binary_model = std::make_shared<const classify::LinearModel>(serialize::load_model(cfg.binary_model));
    }
    if (e->binary_model->taxonomy.kind != classify::TaxonomyKind::Binary) {
        throw InvalidInput("models.binary: '" + e->binary_model->id + "' is not a binary model");
    }
    register_model(e->binary_model);
    if (cfg.multi8_model) {
        e->multi8_model = std::make_shared<const classify::LinearModel>(serialize::load_model(*cfg.multi8_model));
        if (e->multi8_model->taxonomy.kind != classify::TaxonomyKind::Multi8) {
            throw InvalidInput("models.multi8: '" + e->multi8_model->id + "' is not an 8-class model");
        }
        register_model(e->multi8_model);
    }

    e->registry.set_default(providers::ProviderKind::Classifier,
                            cfg.classifier_provider.empty() ? e->binary_model->id : cfg.classifier_provider);
    e->registry.set_default(providers::ProviderKind::Segmenter, cfg.segmenter_provider);
    e->registry.set_default(providers::ProviderKind::FeatureMask, cfg.feature_mask_provider);
    for (const auto& [cls, id] : cfg.feature_class_providers) e->registry.bind_feature_class(cls, id);
    e->registry.check_complete();
    return e;
}

std::string content_hash(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Json model_info(const Engine& e) {
    Json provs = Json::array();
    for (const auto& d : e.registry.descriptors()) {
        Json item = {{"kind", providers::kind_name(d.kind)}, {"id", d.id}, {"heuristic", d.heuristic}};
        if (d.taxonomy) item["taxonomy"] = d.taxonomy->name();
        item["capabilities"] = {{"white_box_explainable", d.capabilities.white_box_explainable},
                                {"batch", d.capabilities.batch}};
        provs.push_back(item);
    }
    Json classes = Json::object();
    for (auto cls : providers::kAllFeatureClasses) {
        std::string id;
        try {
            id = e.registry.feature_mask(cls).descriptor.id;
        } catch (const providers::ProviderUnavailable&) {
            id = providers::kUnavailable;
        }
        classes[std::string(providers::feature_class_name(cls))] = id;
    }
    return {
        {"binary_classification_model", e.registry.classifier_for(classify::ClassTaxonomy::binary()).descriptor.id},
        {"multi8_classification_model", e.multi8_model ? Json(e.multi8_model->id) : Json()},
        {"segmentation_model", e.registry.default_id(providers::ProviderKind::Segmenter)},
        {"feature_extraction", classes},
        {"providers", provs},
        {"feature_names", classify::feature_names()},
        {"mm_per_pixel", e.config.mm_per_pixel},
        {"rise_defaults", serialize::rise_params_json(e.config.rise)},
        {"rise_max_masks", e.config.rise_max_masks},
    };
}

namespace {

/// Error carrying an HTTP status and optional extra JSON fields.
class HttpError : public Error {
public:
    HttpError(int status, const std::string& what, Json extra = Json::object())
        : Error(what), status_(status), extra_(std::move(extra)) {}
    int status() const noexcept { return status_; }
    const Json& extra() const noexcept { return extra_; }

private:
    int status_;
    Json extra_;
};

class ArtifactCache {
public:
    explicit ArtifactCache(std::size_t cap_bytes) : cap_(cap_bytes) {}

    void put(const std::string& key, std::string type, std::string bytes) {
        std::lock_guard lock(mu_);
        if (auto it = index_.find(key); it != index_.end()) {
            used_ -= it->second->second.bytes.size();
            order_.erase(it->second);
            index_.erase(it);
        }
        used_ += bytes.size();
        order_.push_front({key, {std::move(type), std::move(bytes)}});
        index_[key] = order_.begin();
        while (used_ > cap_ && order_.size() > 1) {
            used_ -= order_.back().second.bytes.size();
            index_.erase(order_.back().first);
            order_.pop_back();
        }
    }

    struct Item {
        std::string type;
        std::string bytes;
    };

    std::optional<Item> get(const std::string& key) {
        std::lock_guard lock(mu_);
        const auto it = index_.find(key);
        if (it == index_.end()) return std::nullopt;
        order_.splice(order_.begin(), order_, it->second);
        return it->second->second;
    }

private:
    std::mutex mu_;
    std::size_t cap_;
    std::size_t used_ = 0;
    std::list<std::pair<std::string, Item>> order_;
    std::unordered_map<std::string, std::list<std::pair<std::string, Item>>::iterator> index_;
};

class SizeIndex {
public:
    void put(const std::string& id, int w, int h) {
        std::lock_guard lock(mu_);
        if (sizes_.emplace(id, std::make_pair(w, h)).second) {
            fifo_.push_back(id);
            if (fifo_.size() > kMax) {
                sizes_.erase(fifo_.front());
                fifo_.pop_front();
            }
        }
    }
    std::optional<std::pair<int, int>> get(const std::string& id) {
        std::lock_guard lock(mu_);
        const auto it = sizes_.find(id);
        if (it == sizes_.end()) return std::nullopt;
        return it->second;
    }

private:
    static constexpr std::size_t kMax = 100000;
    std::mutex mu_;
    std::unordered_map<std::string, std::pair<int, int>> sizes_;
    std::deque<std::string> fifo_;
};

struct Job {
    std::string status = "queued";
    std::size_t total = 0;
    std::atomic<std::size_t> done{0};
    Json result;
    std::string error;
};

std::string mime_for(const fs::path& p) {
    static const std::unordered_map<std::string, std::string> types{
        {".html", "text/html"},       {".htm", "text/html"},          {".js", "application/javascript"},
        {".mjs", "application/javascript"}, {".css", "text/css"},     {".json", "application/json"},
        {".map", "application/json"}, {".png", "image/png"},          {".jpg", "image/jpeg"},
        {".jpeg", "image/jpeg"},      {".gif", "image/gif"},          {".svg", "image/svg+xml"},
        {".ico", "image/x-icon"},     {".txt", "text/plain"},         {".woff", "font/woff"},
        {".woff2", "font/woff2"},     {".wasm", "application/wasm"},  {".webp", "image/webp"},
    };
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    const auto it = types.find(ext);
    return it == types.end() ? "application/octet-stream" : it->second;
}

std::string to_string(std::span<const std::uint8_t> b) { return {reinterpret_cast<const char*>(b.data()), b.size()}; }

std::span<const std::uint8_t> to_bytes(const std::string& s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

void send_json(httplib::Response& res, int status, const Json& j) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
}

std::optional<std::string> param(const httplib::Request& req, const std::string& name) {
    if (req.has_param(name)) return req.get_param_value(name);
    if (req.has_file(name)) {
        const auto f = req.get_file_value(name);
        if (f.filename.empty()) return f.content;
    }
    return std::nullopt;
}

double number_param(const httplib::Request& req, const std::string& name, double fallback) {
    const auto v = param(req, name);
    if (!v) return fallback;
    try {
        std::size_t used = 0;
        const double d = std::stod(*v, &used);
        if (used != v->size() || !std::isfinite(d)) throw std::invalid_argument(name);
        return d;
    } catch (const std::exception&) {
        throw HttpError(400, name + ": must be a number");
    }
}

long long int_param(const httplib::Request& req, const std::string& name, long long fallback) {
    const auto v = param(req, name);
    if (!v) return fallback;
    try {
        std::size_t used = 0;
        const long long d = std::stoll(*v, &used);
        if (used != v->size()) throw std::invalid_argument(name);
        return d;
    } catch (const std::exception&) {
        throw HttpError(400, name + ": must be an integer");
    }
}

struct Upload {
    std::string filename;
    std::string image_id;
    RasterImage image;
};

}  // namespace

struct Server::Impl {
    config::ServiceConfig initial;
    mutable std::mutex engine_mu;
    std::shared_ptr<const Engine> current;
    std::mutex store_mu;
    std::shared_ptr<feedback::FeedbackStore> store;
    ArtifactCache artifacts;
    SizeIndex sizes;
    httplib::Server http;
    std::thread thread;
    int port = -1;

    std::mutex jobs_mu;
    std::unordered_map<std::string, std::shared_ptr<Job>> jobs;
    std::vector<std::thread> job_threads;
    std::atomic<std::uint64_t> job_counter{0};

    explicit Impl(config::ServiceConfig cfg)
        : initial(cfg), current(build_engine(cfg)), store(std::make_shared<feedback::FeedbackStore>(cfg.feedback_store)),
          artifacts(cfg.cache_mb * 1024 * 1024) {
        routes();
    }

    ~Impl() {
        std::lock_guard lock(jobs_mu);
        for (auto& t : job_threads) {
            if (t.joinable()) t.join();
        }
    }

    std::shared_ptr<const Engine> engine() const {
        std::lock_guard lock(engine_mu);
        return current;
    }

    std::shared_ptr<feedback::FeedbackStore> feedback_store() {
        std::lock_guard lock(store_mu);
        return store;
    }

    template <class F>
    httplib::Server::Handler guarded(F f) {
        return [f](const httplib::Request& req, httplib::Response& res) {
            try {
                f(req, res);
            } catch (const HttpError& e) {
                Json body = {{"error", e.what()}};
                body.update(e.extra());
                send_json(res, e.status(), body);
            } catch (const providers::ProviderUnavailable& e) {
                send_json(res, 503, {{"error", e.what()}});
            } catch (const ExplanationAborted& e) {
                send_json(res, 500, {{"error", e.what()}});
            } catch (const Error& e) {
                send_json(res, 400, {{"error", e.what()}});
            } catch (const std::exception& e) {
                send_json(res, 500, {{"error", std::string("internal error: ") + e.what()}});
            }
        };
    }

    Upload read_upload(const httplib::Request& req) {
        if (!req.has_file("file")) throw HttpError(400, "missing multipart field 'file'");
        const auto f = req.get_file_value("file");
        Upload u;
        u.filename = f.filename;
        try {
            u.image = codec::decode(to_bytes(f.content));
        } catch (const Error& e) {
            throw HttpError(400, e.what(), {{"filename", u.filename}});
        }
        u.image = imaging::ensure_rgb(u.image);
        u.image_id = content_hash(to_bytes(f.content));
        sizes.put(u.image_id, u.image.width(), u.image.height());
        return u;
    }

    std::string store_artifact(const std::string& image_id, const std::string& name, std::string type,
                               std::vector<std::uint8_t> bytes) {
        const std::string key = image_id + "/" + name;
        artifacts.put(key, std::move(type), to_string(bytes));
        return "/artifacts/" + key;
    }

    static void send_png(httplib::Response& res, const std::vector<std::uint8_t>& png) {
        res.status = 200;
        res.set_content(to_string(png), "image/png");
    }

    void routes() {
        http.set_payload_max_length(512ull * 1024 * 1024);
        const int threads = initial.worker_threads;
        http.new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<std::size_t>(threads)); };
        http.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
            if (res.body.empty()) {
                send_json(res, res.status, {{"error", "no route for " + req.method + " " + req.path}});
            }
        });
        http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            std::string msg = "internal error";
            try {
                std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                msg += std::string(": ") + e.what();
            } catch (...) {
            }
            send_json(res, 500, {{"error", msg}});
        });

        auto info = guarded([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, model_info(*engine()));
        });
        http.Get("/model_info", info);
        http.Post("/model_info", info);

        auto html = guarded([this](const httplib::Request& req, httplib::Response& res) { serve_static(req, res); });
        http.Get(R"(/html/(.*))", html);
        http.Post(R"(/html/(.*))", html);

        http.Post("/classify/binary", [this](const httplib::Request& req, httplib::Response& res) {
            std::string filename;
            if (req.has_file("file")) filename = req.get_file_value("file").filename;
            guarded([&](const httplib::Request& r, httplib::Response& s) { classify_binary(r, s); })(req, res);
            if (res.status != 200 && !filename.empty()) {
                auto body = Json::parse(res.body, nullptr, false);
                if (body.is_object() && !body.contains("filename")) {
                    Json out = {{"error", body.value("error", std::string())}, {"filename", filename}};
                    res.set_content(out.dump(), "application/json");
                }
            }
        });
        http.Post("/segment", guarded([this](const httplib::Request& req, httplib::Response& res) { segment(req, res); }));
        http.Post(R"(/extract_feature/([^/]+))",
                  guarded([this](const httplib::Request& req, httplib::Response& res) { extract_feature(req, res); }));
        http.Post("/features/abcd",
                  guarded([this](const httplib::Request& req, httplib::Response& res) { features_abcd(req, res); }));
        http.Post("/classify/confidence",
                  guarded([this](const httplib::Request& req, httplib::Response& res) { classify_confidence(req, res); }));
        http.Post("/explain/rise",
                  guarded([this](const httplib::Request& req, httplib::Response& res) { explain_rise(req, res); }));
        http.Post("/evaluate", guarded([this](const httplib::Request& req, httplib::Response& res) { evaluate(req, res); }));
        http.Get(R"(/jobs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) { job_status(req, res); }));
        http.Post("/feedback", guarded([this](const httplib::Request& req, httplib::Response& res) { post_feedback(req, res); }));
        http.Get(R"(/feedback/([^/]+))",
                 guarded([this](const httplib::Request& req, httplib::Response& res) { get_feedback(req, res); }));
        http.Get(R"(/artifacts/([0-9a-f]{16})/([A-Za-z0-9_.-]+))",
                 guarded([this](const httplib::Request& req, httplib::Response& res) { get_artifact(req, res); }));
        http.Post("/admin/reload", guarded([this](const httplib::Request&, httplib::Response& res) {
                      reload();
                      send_json(res, 200, model_info(*engine()));
                  }));
    }

    void serve_static(const httplib::Request& req, httplib::Response& res) {
        const std::string rel = req.matches[1];
        if (rel.empty()) throw HttpError(404, "no file requested");
        const fs::path p(rel);
        if (p.is_absolute() || rel.find('\\') != std::string::npos || rel.find('\0') != std::string::npos) {
            throw HttpError(403, "path escapes the static root");
        }
        for (const auto& part : p) {
            if (part == "..") throw HttpError(403, "path escapes the static root");
        }
        const auto e = engine();
        const fs::path full = e->config.static_root / p;
        if (!fs::is_regular_file(full)) throw HttpError(404, "file '" + rel + "' not found");
        const auto bytes = codec::read_file(full);
        res.status = 200;
        res.set_content(to_string(bytes), mime_for(full));
    }

    const providers::Provider<providers::ClassifierFn>& binary_classifier(const Engine& e,
                                                                           const httplib::Request& req) {
        const auto id = param(req, "provider");
        if (!id) return e.registry.classifier_for(classify::ClassTaxonomy::binary());
        const auto& p = e.registry.classifier(*id);
        if (p.descriptor.taxonomy != classify::ClassTaxonomy::binary()) {
            throw HttpError(400, "provider '" + *id + "' is not a binary classifier");
        }
        return p;
    }

    void classify_binary(const httplib::Request& req, httplib::Response& res) {
        const auto e = engine();
        const Upload u = read_upload(req);
        const auto& clf = binary_classifier(*e, req);
        const auto pred = clf.fn(u.image);
        send_json(res, 200, serialize::binary_response(u.filename, pred));
    }

    BinaryMask lesion_mask(const Engine& e, const httplib::Request& req, const RasterImage& img) {
        const auto id = param(req, "segmenter");
        return e.registry.segmenter(id ? *id : std::string()).fn(img);
    }

    void segment(const httplib::Request& req, httplib::Response& res) {
        const auto e = engine();
        const Upload u = read_upload(req);
        send_png(res, codec::encode_mask_png(lesion_mask(*e, req, u.image)));
    }

    void extract_feature(const httplib::Request& req, httplib::Response& res) {
        const std::string name = req.matches[1];
        const auto cls = providers::feature_class_from_name(name);
        if (!cls) {
            throw HttpError(404, "unknown feature class '" + name +
                                     "' (expected globules, streaks, pigment_network, milia_like_cyst or "
                                     "negative_network)");
        }
        const auto e = engine();
        const auto provider_id = param(req, "provider");
        const auto& provider = e->registry.feature_mask(*cls, provider_id ? *provider_id : std::string());
        const Upload u = read_upload(req);
        const BinaryMask lesion = lesion_mask(*e, req, u.image);
        const BinaryMask mask = provider.fn(u.image, lesion, *cls);
        send_png(res, codec::encode_mask_png(mask));
        res.set_header("X-Provider-Id", provider.descriptor.id);
        res.set_header("X-Provider-Kind", provider.descriptor.heuristic ? "heuristic" : "model");
    }

    void features_abcd(const httplib::Request& req, httplib::Response& res) {
        const auto e = engine();
        const double mmpp = number_param(req, "mm_per_pixel", e->config.mm_per_pixel);
        if (!(mmpp > 0.0)) throw HttpError(400, "mm_per_pixel: must be > 0");
        const Upload u = read_upload(req);
        const BinaryMask mask = lesion_mask(*e, req, u.image);
        const auto cfg = e->abcd_config(mmpp);
        const auto a = pipeline::analyze_features(u.image, mask, cfg);
        serialize::OverlayUrls urls;
        urls.mask = store_artifact(u.image_id, "mask.png", "image/png", codec::encode_mask_png(mask));
        urls.segmentation = store_artifact(u.image_id, "segmentation.png", "image/png",
                                           codec::encode_png(pipeline::render_segmentation_layer(u.image, mask)));
        urls.colors = store_artifact(u.image_id, "colors.png", "image/png",
                                     codec::encode_png(pipeline::render_color_layer(u.image, mask, cfg.colors)));
        urls.asymmetry = store_artifact(u.image_id, "asymmetry.png", "image/png",
                                        codec::encode_png(pipeline::render_asymmetry_layer(u.image, mask, a.features)));
        send_json(res, 200, serialize::abcd_response(u.filename, u.image_id, u.image, a.features, a.scores, urls));
    }

    void classify_confidence(const httplib::Request& req, httplib::Response& res) {
        const auto e = engine();
        const std::string tax_name = param(req, "taxonomy").value_or("binary");
        classify::ClassTaxonomy tax;
        try {
            tax = classify::ClassTaxonomy::from_name(tax_name);
        } catch (const Error& err) {
            throw HttpError(400, std::string("taxonomy: ") + err.what());
        }
        const auto& clf = e->registry.classifier_for(tax);
        const Upload u = read_upload(req);
        const auto pred = clf.fn(u.image);
        send_json(res, 200, serialize::confidence_response(u.filename, clf.descriptor.id, tax, pred));
    }

    void explain_rise(const httplib::Request& req, httplib::Response& res) {
        const auto e = engine();
        const int limit = e->config.rise_max_masks;
        explain::RiseParams p = e->config.rise;
        const long long n = int_param(req, "n_masks", p.n_masks);
        if (n < 1) throw HttpError(400, "n_masks: must be >= 1", {{"limit", limit}});
        if (n > limit) {
            throw HttpError(400, "n_masks: " + std::to_string(n) + " exceeds the limit of " + std::to_string(limit),
                            {{"limit", limit}});
        }
        p.n_masks = static_cast<int>(n);
        p.grid_cells = static_cast<int>(int_param(req, "grid_cells", p.grid_cells));
        p.p_on = number_param(req, "p_on", p.p_on);
        const long long seed = int_param(req, "seed", static_cast<long long>(p.seed));
        if (seed < 0) throw HttpError(400, "seed: must be >= 0");
        p.seed = static_cast<std::uint64_t>(seed);
        const double opacity = number_param(req, "opacity", 0.8);
        if (opacity < 0.0 || opacity > 1.0) throw HttpError(400, "opacity: must lie in [0, 1]");
        try {
            p.validate();
        } catch (const InvalidParameter& err) {
            throw HttpError(400, err.what(), {{"limit", limit}});
        }

        const auto& clf = binary_classifier(*e, req);
        const auto tax = *clf.descriptor.taxonomy;
        p.target_class = 1;
        if (const auto t = param(req, "target")) {
            try {
                p.target_class = tax.index_of(*t);
            } catch (const Error&) {
                throw HttpError(400, "target: must be one of benign, malignant");
            }
        }
        const Upload u = read_upload(req);
        const RasterImage work = imaging::limit_size(u.image, e->config.explain_max_side);
        const auto t0 = std::chrono::steady_clock::now();
        const auto map = explain::rise(work, pipeline::uniform_on_no_lesion(clf.fn, tax.size()), p);
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

        FloatPlane values = map.values;
        if (work.width() != u.image.width() || work.height() != u.image.height()) {
            values = imaging::resize_plane(values, u.image.width(), u.image.height());
            for (double& v : values.values()) v = std::clamp(v, 0.0, 1.0);
        }
        const RasterImage heat = imaging::colorize(values);
        Json params = serialize::rise_params_json(p);
        params["opacity"] = opacity;
        params["working_size"] = Json::array({work.width(), work.height()});
        const std::string key = "rise-" + content_hash(to_bytes(params.dump())).substr(0, 12);
        Json body = {
            {"filename", u.filename},
            {"image_id", u.image_id},
            {"classifier", clf.descriptor.id},
            {"target_class", tax.labels[p.target_class]},
            {"params", params},
            {"saliency_url", store_artifact(u.image_id, key + "-saliency.png", "image/png", codec::encode_plane_png16(values))},
            {"heatmap_url", store_artifact(u.image_id, key + "-heatmap.png", "image/png", codec::encode_png(heat))},
            {"overlay_url", store_artifact(u.image_id, key + "-overlay.png", "image/png",
                                           codec::encode_png(imaging::blend_overlay(u.image, heat, opacity)))},
            {"elapsed_ms", ms},
        };
        send_json(res, 200, body);
    }

    using ItemList = std::vector<std::pair<std::string, std::string>>;  // id, encoded bytes

    static void add_upload(ItemList& items, const std::string& name, const std::string& content) {
        if (archive::looks_like_zip(to_bytes(content))) {
            for (auto& entry : archive::read_zip(to_bytes(content))) {
                if (archive::is_image_member(entry.name)) items.emplace_back(entry.name, to_string(entry.data));
            }
        } else {
            items.emplace_back(name, content);
        }
    }

    void add_manifest_path(const Engine& e, ItemList& items, const std::string& rel, const std::string& field) {
        const fs::path p(rel);
        if (p.is_absolute()) throw HttpError(400, field + ": paths must be relative to the data root");
        for (const auto& part : p) {
            if (part == "..") throw HttpError(403, field + ": path escapes the data root");
        }
        const fs::path full = e.config.data_root / p;
        if (fs::is_directory(full)) {
            std::vector<fs::path> files;
            for (const auto& de : fs::directory_iterator(full)) {
                if (de.is_regular_file() && archive::is_image_member(de.path().filename().string())) {
                    files.push_back(de.path());
                }
            }
            std::sort(files.begin(), files.end());
            for (const auto& f : files) items.emplace_back((p / f.filename()).string(), to_string(codec::read_file(f)));
        } else if (fs::is_regular_file(full)) {
            add_upload(items, rel, to_string(codec::read_file(full)));
        } else {
            throw HttpError(400, field + ": '" + rel + "' not found under the data root");
        }
    }

    void evaluate(const httplib::Request& req, httplib::Response& res) {
        const auto e = engine();
        ItemList benign, malignant;
        if (req.is_multipart_form_data()) {
            for (const auto& f : req.get_file_values("benign")) add_upload(benign, f.filename, f.content);
            for (const auto& f : req.get_file_values("malignant")) add_upload(malignant, f.filename, f.content);
        } else {
            const Json body = serialize::parse(req.body, "request body");
            for (const char* field : {"benign", "malignant"}) {
                if (!body.contains(field) || !body.at(field).is_array()) {
                    throw HttpError(400, std::string(field) + ": must be an array of paths");
                }
                for (const auto& v : body.at(field)) {
                    if (!v.is_string()) throw HttpError(400, std::string(field) + ": entries must be strings");
                    add_manifest_path(*e, field == std::string("benign") ? benign : malignant, v.get<std::string>(),
                                      field);
                }
            }
        }
        if (benign.empty()) throw HttpError(400, "benign: no images supplied");
        if (malignant.empty()) throw HttpError(400, "malignant: no images supplied");

        auto bytes_by_id = std::make_shared<std::unordered_map<std::string, std::string>>();
        auto unique_ids = [&](ItemList& list, const char* prefix) {
            std::vector<std::string> ids;
            for (auto& [id, data] : list) {
                std::string key = std::string(prefix) + "/" + id;
                for (int k = 2; bytes_by_id->count(key); ++k) key = std::string(prefix) + "/" + id + "#" + std::to_string(k);
                bytes_by_id->emplace(key, std::move(data));
                ids.push_back(key);
            }
            return ids;
        };
        auto b_ids = unique_ids(benign, "benign");
        auto m_ids = unique_ids(malignant, "malignant");
        const std::size_t total = b_ids.size() + m_ids.size();
        const auto& clf = binary_classifier(*e, req);
        auto fn = clf.fn;
        auto job = std::make_shared<Job>();
        job->total = total;
        auto run = [e, fn, bytes_by_id, b_ids, m_ids, job] {
            auto scorer = [&](const std::string& id) {
                struct Tick {
                    Job& j;
                    ~Tick() { ++j.done; }
                } tick{*job};
                const auto& data = bytes_by_id->at(id);
                const RasterImage img = imaging::ensure_rgb(codec::decode(to_bytes(data)));
                return fn(img).probs.at(1);
            };
            const auto scored = eval::score_dataset(b_ids, m_ids, scorer, e->config.worker_threads);
            auto report = eval::sweep(scored.scores);
            report.failures = scored.failures;
            return serialize::eval_report_json(report, scored.scores);
        };

        if (static_cast<int>(total) <= e->config.evaluate_async_threshold) {
            try {
                send_json(res, 200, run());
            } catch (const EvaluationError& err) {
                throw HttpError(400, err.what());
            }
            return;
        }
        const std::string id = "job-" + std::to_string(++job_counter);
        {
            std::lock_guard lock(jobs_mu);
            jobs[id] = job;
            job_threads.emplace_back([this, job, run] {
                {
                    std::lock_guard l(jobs_mu);
                    job->status = "running";
                }
                try {
                    Json result = run();
                    std::lock_guard l(jobs_mu);
                    job->result = std::move(result);
                    job->status = "done";
                } catch (const std::exception& err) {
                    std::lock_guard l(jobs_mu);
                    job->error = err.what();
                    job->status = "failed";
                }
            });
        }
        send_json(res, 202, {{"job_id", id}, {"status", "queued"}, {"status_url", "/jobs/" + id}, {"total", total}});
    }

    void job_status(const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        std::lock_guard lock(jobs_mu);
        const auto it = jobs.find(id);
        if (it == jobs.end()) throw HttpError(404, "unknown job '" + id + "'");
        const auto& j = *it->second;
        Json body = {{"job_id", id},
                     {"status", j.status},
                     {"progress", {{"done", j.done.load()}, {"total", j.total}}}};
        if (j.status == "done") body["report"] = j.result;
        if (j.status == "failed") body["error"] = j.error;
        send_json(res, 200, body);
    }

    void post_feedback(const httplib::Request& req, httplib::Response& res) {
        const Json body = serialize::parse(req.body, "request body");
        feedback::FeedbackRecord rec;
        try {
            rec = feedback::parse_submission(body, [this](const std::string& id) { return sizes.get(id); });
        } catch (const InvalidInput& err) {
            const std::string msg = err.what();
            throw HttpError(400, msg, {{"field", msg.substr(0, msg.find(':'))}});
        }
        const std::string id = feedback_store()->append(std::move(rec));
        send_json(res, 200, {{"record_id", id}});
    }

    void get_feedback(const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        const auto rec = feedback_store()->get(id);
        if (!rec) throw HttpError(404, "unknown feedback record '" + id + "'");
        send_json(res, 200, *rec);
    }

    void get_artifact(const httplib::Request& req, httplib::Response& res) {
        const std::string key = std::string(req.matches[1]) + "/" + std::string(req.matches[2]);
        const auto item = artifacts.get(key);
        if (!item) throw HttpError(404, "artifact '" + key + "' is not cached");
        res.status = 200;
        res.set_content(item->bytes, item->type);
    }

    void reload() {
        std::shared_ptr<const Engine> before = engine();
        if (before->config.source.empty()) throw HttpError(400, "server was started without a config file");
        config::ServiceConfig cfg = config::load(before->config.source);
        auto next = build_engine(cfg);
        if (cfg.feedback_store != before->config.feedback_store) {
            auto s = std::make_shared<feedback::FeedbackStore>(cfg.feedback_store);
            std::lock_guard lock(store_mu);
            store = std::move(s);
        }
        std::lock_guard lock(engine_mu);
        current = std::move(next);
    }
};

Server::Server(config::ServiceConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}

Server::~Server() { stop(); }

int Server::bind() {
    const auto& c = impl_->initial;
    if (c.port == 0) {
        impl_->port = impl_->http.bind_to_any_port(c.host);
    } else if (impl_->http.bind_to_port(c.host, c.port)) {
        impl_->port = c.port;
    } else {
        impl_->port = -1;
    }
    if (impl_->port < 0) throw Error("cannot bind " + c.host + ":" + std::to_string(c.port));
    return impl_->port;
}

void Server::serve() { impl_->http.listen_after_bind(); }

int Server::start() {
    const int port = bind();
    impl_->thread = std::thread([this] { serve(); });
    impl_->http.wait_until_ready();
    return port;
}

void Server::stop() {
    if (!impl_) return;
    impl_->http.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

void Server::reload() { impl_->reload(); }

std::shared_ptr<const Engine> Server::engine() const { return impl_->engine(); }

}  // namespace lesionkit::service
