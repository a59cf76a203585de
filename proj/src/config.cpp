#include "lesionkit/config.hpp"

#include <set>

#include "lesionkit/codec.hpp"

namespace lesionkit::config {

namespace fs = std::filesystem;
using serialize::Json;

namespace {

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& path) {
    if (!j.is_object()) throw InvalidInput(path + ": must be an object");
    for (const auto& [k, v] : j.items()) {
        if (!allowed.count(k)) throw InvalidInput(path + "." + k + ": unknown key");
    }
}

template <class T>
void read(const Json& j, const char* key, T& out, const std::string& path) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw InvalidInput(path + "." + key + ": wrong type");
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace

void ServiceConfig::validate() const {
    if (port < 0 || port > 65535) throw InvalidInput("port: must be in 0..65535");
    if (!fs::is_directory(static_root)) {
        throw InvalidInput("static_root: directory '" + static_root.string() + "' does not exist");
    }
    if (binary_model != kBuiltinPrior && !fs::is_regular_file(binary_model)) {
        throw InvalidInput("models.binary: file '" + binary_model + "' does not exist");
    }
    if (multi8_model && !fs::is_regular_file(*multi8_model)) {
        throw InvalidInput("models.multi8: file '" + multi8_model->string() + "' does not exist");
    }
    if (!fs::is_directory(data_root)) throw InvalidInput("data_root: directory '" + data_root.string() + "' does not exist");
    segmentation.chan_vese.validate();
    rise.validate();
    if (rise_max_masks < 1) throw InvalidInput("rise.max_masks: must be >= 1");
    if (rise.n_masks > rise_max_masks) throw InvalidInput("rise.n_masks: exceeds rise.max_masks");
    if (explain_max_side < 8) throw InvalidInput("rise.working_max_side: must be >= 8");
    if (!(mm_per_pixel > 0.0)) throw InvalidInput("mm_per_pixel: must be > 0");
    if (evaluate_async_threshold < 0) throw InvalidInput("evaluate.async_threshold: must be >= 0");
    if (worker_threads < 1) throw InvalidInput("worker_threads: must be >= 1");
}

ServiceConfig from_json(const Json& j, const fs::path& base_dir) {
    reject_unknown(j, {"host", "port", "static_root", "feedback_store", "data_root", "models", "providers", "segmentation",
                       "rise", "mm_per_pixel", "cache_mb", "evaluate", "worker_threads"},
                   "config");
    ServiceConfig c;
    read(j, "host", c.host, "config");
    read(j, "port", c.port, "config");
    std::string s;
    if (j.contains("static_root")) {
        read(j, "static_root", s, "config");
        c.static_root = resolve(base_dir, s);
    } else {
        c.static_root = base_dir / c.static_root;
    }
    if (j.contains("feedback_store")) {
        read(j, "feedback_store", s, "config");
        c.feedback_store = resolve(base_dir, s);
    } else {
        c.feedback_store = base_dir / c.feedback_store;
    }
    if (j.contains("data_root")) {
        read(j, "data_root", s, "config");
        c.data_root = resolve(base_dir, s);
    } else {
        c.data_root = base_dir;
    }
    if (j.contains("models")) {
        const auto& m = j.at("models");
        reject_unknown(m, {"binary", "multi8"}, "config.models");
        if (m.contains("binary")) {
            read(m, "binary", s, "config.models");
            c.binary_model = s == kBuiltinPrior ? s : resolve(base_dir, s).string();
        }
        if (m.contains("multi8") && !m.at("multi8").is_null()) {
            read(m, "multi8", s, "config.models");
            c.multi8_model = resolve(base_dir, s);
        }
    }
    if (j.contains("providers")) {
        const auto& p = j.at("providers");
        reject_unknown(p, {"classifier", "segmenter", "feature_mask", "feature_classes", "feature_bands"},
                       "config.providers");
        read(p, "classifier", c.classifier_provider, "config.providers");
        read(p, "segmenter", c.segmenter_provider, "config.providers");
        read(p, "feature_mask", c.feature_mask_provider, "config.providers");
        if (p.contains("feature_classes")) {
            for (const auto& [name, id] : p.at("feature_classes").items()) {
                const auto cls = providers::feature_class_from_name(name);
                if (!cls) throw InvalidInput("config.providers.feature_classes." + name + ": unknown feature class");
                if (!id.is_string()) throw InvalidInput("config.providers.feature_classes." + name + ": must be a string");
                c.feature_class_providers[*cls] = id.get<std::string>();
            }
        }
        if (p.contains("feature_bands")) {
            for (const auto& [name, b] : p.at("feature_bands").items()) {
                const auto cls = providers::feature_class_from_name(name);
                const std::string path = "config.providers.feature_bands." + name;
                if (!cls) throw InvalidInput(path + ": unknown feature class");
                reject_unknown(b, {"sigma_fine", "sigma_coarse", "polarity", "k_sigma", "min_contrast"}, path);
                auto& band = c.feature_bands[*cls];
                read(b, "sigma_fine", band.sigma_fine, path);
                read(b, "sigma_coarse", band.sigma_coarse, path);
                read(b, "k_sigma", band.k_sigma, path);
                read(b, "min_contrast", band.min_contrast, path);
                if (b.contains("polarity")) {
                    std::string pol;
                    read(b, "polarity", pol, path);
                    if (pol != "dark" && pol != "bright") throw InvalidInput(path + ".polarity: dark or bright");
                    band.polarity = pol == "dark" ? providers::Polarity::Dark : providers::Polarity::Bright;
                }
            }
        }
    }
    if (j.contains("segmentation")) {
        const auto& g = j.at("segmentation");
        const std::string path = "config.segmentation";
        reject_unknown(g, {"kernel_size", "sigma", "working_max_side", "lambda_in", "lambda_out", "mu", "max_iters",
                           "margin_fraction"},
                       path);
        read(g, "kernel_size", c.segmentation.preprocess.kernel_size, path);
        read(g, "sigma", c.segmentation.preprocess.sigma, path);
        read(g, "working_max_side", c.segmentation.preprocess.working_max_side, path);
        read(g, "lambda_in", c.segmentation.chan_vese.lambda_inside, path);
        read(g, "lambda_out", c.segmentation.chan_vese.lambda_outside, path);
        read(g, "mu", c.segmentation.chan_vese.mu, path);
        read(g, "max_iters", c.segmentation.chan_vese.max_iters, path);
        read(g, "margin_fraction", c.segmentation.chan_vese.margin_fraction, path);
    }
    if (j.contains("rise")) {
        const auto& r = j.at("rise");
        const std::string path = "config.rise";
        reject_unknown(r, {"n_masks", "grid_cells", "p_on", "seed", "threads", "max_masks", "working_max_side"}, path);
        read(r, "n_masks", c.rise.n_masks, path);
        read(r, "grid_cells", c.rise.grid_cells, path);
        read(r, "p_on", c.rise.p_on, path);
        read(r, "seed", c.rise.seed, path);
        read(r, "threads", c.rise.threads, path);
        read(r, "max_masks", c.rise_max_masks, path);
        read(r, "working_max_side", c.explain_max_side, path);
    }
    read(j, "mm_per_pixel", c.mm_per_pixel, "config");
    read(j, "cache_mb", c.cache_mb, "config");
    read(j, "worker_threads", c.worker_threads, "config");
    if (j.contains("evaluate")) {
        reject_unknown(j.at("evaluate"), {"async_threshold"}, "config.evaluate");
        read(j.at("evaluate"), "async_threshold", c.evaluate_async_threshold, "config.evaluate");
    }
    return c;
}

ServiceConfig load(const fs::path& path) {
    if (!fs::is_regular_file(path)) throw InvalidInput("config file '" + path.string() + "' does not exist");
    const auto bytes = codec::read_file(path);
    const auto j = serialize::parse(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                                    path.string());
    ServiceConfig c = from_json(j, fs::absolute(path).parent_path());
    c.source = fs::absolute(path);
    return c;
}

Json to_json(const ServiceConfig& c) {
    Json classes = Json::object();
    for (const auto& [cls, id] : c.feature_class_providers) classes[std::string(providers::feature_class_name(cls))] = id;
    return {
        {"host", c.host},
        {"port", c.port},
        {"static_root", c.static_root.string()},
        {"feedback_store", c.feedback_store.string()},
        {"data_root", c.data_root.string()},
        {"models", {{"binary", c.binary_model}, {"multi8", c.multi8_model ? Json(c.multi8_model->string()) : Json()}}},
        {"providers",
         {{"classifier", c.classifier_provider},
          {"segmenter", c.segmenter_provider},
          {"feature_mask", c.feature_mask_provider},
          {"feature_classes", classes}}},
        {"segmentation", serialize::segmentation_config_json(c.segmentation)},
        {"rise",
         {{"n_masks", c.rise.n_masks},
          {"grid_cells", c.rise.grid_cells},
          {"p_on", c.rise.p_on},
          {"seed", c.rise.seed},
          {"threads", c.rise.threads},
          {"max_masks", c.rise_max_masks},
          {"working_max_side", c.explain_max_side}}},
        {"mm_per_pixel", c.mm_per_pixel},
        {"cache_mb", c.cache_mb},
        {"evaluate", {{"async_threshold", c.evaluate_async_threshold}}},
        {"worker_threads", c.worker_threads},
    };
}

}  // namespace lesionkit::config
