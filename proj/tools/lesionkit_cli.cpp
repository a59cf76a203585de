#include <CLI11.hpp>

#include <chrono>
#include <csignal>
#include <pthread.h>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lesionkit/archive.hpp"
#include "lesionkit/codec.hpp"
#include "lesionkit/config.hpp"
#include "lesionkit/evalharness.hpp"
#include "lesionkit/explain.hpp"
#include "lesionkit/imaging.hpp"
#include "lesionkit/pipeline.hpp"
#include "lesionkit/serialize.hpp"
#include "lesionkit/service.hpp"

namespace fs = std::filesystem;
using namespace lesionkit;
using serialize::Json;

namespace {

constexpr int kOk = 0;
constexpr int kPipelineError = 1;
constexpr int kUsageError = 2;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config_path;
    std::uint64_t seed = 42;
    std::string model;
};

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

config::ServiceConfig load_config(const Common& c) {
    config::ServiceConfig cfg;
    if (!c.config_path.empty()) {
        if (!fs::is_regular_file(c.config_path)) throw UsageError("config file '" + c.config_path + "' not found");
        cfg = config::load(c.config_path);
    } else {
        cfg.static_root = fs::current_path();
        cfg.data_root = fs::current_path();
    }
    if (!c.model.empty()) {
        if (!fs::is_regular_file(c.model)) throw UsageError("model file '" + c.model + "' not found");
        const auto m = serialize::load_model(c.model);
        if (m.taxonomy.kind == classify::TaxonomyKind::Binary) {
            cfg.binary_model = fs::absolute(c.model).string();
        } else {
            cfg.multi8_model = fs::absolute(c.model);
        }
        cfg.classifier_provider.clear();
    }
    cfg.rise.seed = c.seed;
    return cfg;
}

void require_file(const std::string& p, const char* what) {
    if (!fs::is_regular_file(p)) throw UsageError(std::string(what) + " '" + p + "' not found");
}

void emit(const Json& j, const std::string& out_file) {
    const std::string text = j.dump(2) + "\n";
    if (out_file.empty()) {
        std::cout << text;
    } else {
        if (fs::path(out_file).has_parent_path()) fs::create_directories(fs::path(out_file).parent_path());
        codec::write_file(out_file, codec::as_bytes(text));
    }
}

struct ExplainOptions {
    int n_masks = explain::kDefaultMasks;
    int grid = 7;
    double p_on = 0.5;
    std::string target = "malignant";
    double opacity = 0.8;
    int threads = 1;
};

/// Runs RISE and writes saliency/heatmap/overlay PNGs plus a params sidecar.
Json write_explanation(const service::Engine& e, const RasterImage& img, const ExplainOptions& o, std::uint64_t seed,
                       const fs::path& dir, const std::string& prefix) {
    const auto& clf = e.registry.classifier_for(classify::ClassTaxonomy::binary());
    const auto tax = *clf.descriptor.taxonomy;
    explain::RiseParams p;
    p.n_masks = o.n_masks;
    p.grid_cells = o.grid;
    p.p_on = o.p_on;
    p.seed = seed;
    p.threads = o.threads;
    p.target_class = tax.index_of(o.target);
    if (o.opacity < 0.0 || o.opacity > 1.0) throw InvalidParameter("opacity must lie in [0, 1]");
    const RasterImage work = imaging::limit_size(img, e.config.explain_max_side);
    const auto t0 = std::chrono::steady_clock::now();
    const auto map = explain::rise(work, pipeline::uniform_on_no_lesion(clf.fn, tax.size()), p);
    const double elapsed = ms_since(t0);
    FloatPlane values = map.values;
    if (work.width() != img.width() || work.height() != img.height()) {
        values = imaging::resize_plane(values, img.width(), img.height());
        for (double& v : values.values()) v = std::clamp(v, 0.0, 1.0);
    }
    const RasterImage heat = imaging::colorize(values);
    fs::create_directories(dir);
    codec::write_file(dir / (prefix + "saliency.png"), codec::encode_plane_png16(values));
    codec::write_file(dir / (prefix + "heatmap.png"), codec::encode_png(heat));
    codec::write_file(dir / (prefix + "overlay.png"), codec::encode_png(imaging::blend_overlay(img, heat, o.opacity)));
    Json params = serialize::rise_params_json(p);
    params["opacity"] = o.opacity;
    params["working_size"] = Json::array({work.width(), work.height()});
    params["classifier"] = clf.descriptor.id;
    params["target_label"] = o.target;
    codec::write_file(dir / (prefix + "params.json"), codec::as_bytes(params.dump(2) + "\n"));
    return {{"saliency", (dir / (prefix + "saliency.png")).string()},
            {"heatmap", (dir / (prefix + "heatmap.png")).string()},
            {"overlay", (dir / (prefix + "overlay.png")).string()},
            {"params", (dir / (prefix + "params.json")).string()},
            {"elapsed_ms", elapsed}};
}

int cmd_analyze(const Common& c, const std::string& image, const std::string& out_dir, double mmpp, bool do_explain,
                const ExplainOptions& xo) {
    require_file(image, "image");
    auto cfg = load_config(c);
    if (mmpp > 0) cfg.mm_per_pixel = mmpp;
    const auto e = service::build_engine(cfg);
    const auto bytes = codec::read_file(image);
    const RasterImage img = imaging::ensure_rgb(codec::decode(bytes));
    const std::string image_id = service::content_hash(bytes);
    const std::string filename = fs::path(image).filename().string();

    Json timings = Json::object();
    auto t0 = std::chrono::steady_clock::now();
    const BinaryMask mask = e->registry.segmenter().fn(img);
    timings["segment"] = ms_since(t0);
    t0 = std::chrono::steady_clock::now();
    const auto abcd_cfg = e->abcd_config(cfg.mm_per_pixel);
    const auto a = pipeline::analyze_features(img, mask, abcd_cfg);
    timings["features"] = ms_since(t0);
    t0 = std::chrono::steady_clock::now();
    const auto& clf = e->registry.classifier_for(classify::ClassTaxonomy::binary());
    const auto pred = clf.fn(img);
    timings["classify"] = ms_since(t0);

    serialize::OverlayUrls paths;
    Json artifacts = Json::object();
    if (!out_dir.empty()) {
        const fs::path dir(out_dir);
        fs::create_directories(dir);
        auto put = [&](const std::string& name, const std::vector<std::uint8_t>& png) {
            codec::write_file(dir / name, png);
            return (dir / name).string();
        };
        paths.mask = put("mask.png", codec::encode_mask_png(mask));
        paths.segmentation = put("segmentation.png", codec::encode_png(pipeline::render_segmentation_layer(img, mask)));
        paths.colors = put("colors.png", codec::encode_png(pipeline::render_color_layer(img, mask, abcd_cfg.colors)));
        paths.asymmetry =
            put("asymmetry.png", codec::encode_png(pipeline::render_asymmetry_layer(img, mask, a.features)));
        artifacts = {{"mask", paths.mask},
                     {"segmentation", paths.segmentation},
                     {"colors", paths.colors},
                     {"asymmetry", paths.asymmetry}};
        if (do_explain) {
            t0 = std::chrono::steady_clock::now();
            artifacts["rise"] = write_explanation(*e, img, xo, c.seed, dir, "rise-");
            timings["explain"] = ms_since(t0);
        }
    } else if (do_explain) {
        throw UsageError("--explain needs --out to write heatmap files");
    }

    Json report = {
        {"filename", filename},
        {"image_id", image_id},
        {"abcd", serialize::abcd_response(filename, image_id, img, a.features, a.scores, paths)},
        {"confidence", serialize::confidence_response(filename, clf.descriptor.id, clf.descriptor.taxonomy.value(), pred)},
    };
    if (e->multi8_model) {
        const auto& m8 = e->registry.classifier_for(classify::ClassTaxonomy::multi8());
        report["confidence_multi8"] =
            serialize::confidence_response(filename, m8.descriptor.id, classify::ClassTaxonomy::multi8(), m8.fn(img));
    }
    report["artifacts"] = artifacts;
    report["timings_ms"] = timings;
    emit(report, out_dir.empty() ? std::string() : (fs::path(out_dir) / "report.json").string());
    if (!out_dir.empty()) std::cout << (fs::path(out_dir) / "report.json").string() << "\n";
    return kOk;
}

struct ManifestRow {
    fs::path path;
    std::string label;
};

std::vector<ManifestRow> read_manifest(const fs::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw UsageError("manifest '" + manifest.string() + "' not found");
    const fs::path base = fs::absolute(manifest).parent_path();
    std::vector<ManifestRow> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        ManifestRow r;
        if (line[0] == '{') {
            const auto j = serialize::parse(line, manifest.string() + ":" + std::to_string(lineno));
            r.path = serialize::string_at(j, "path", "line " + std::to_string(lineno) + ".");
            r.label = serialize::string_at(j, "label", "line " + std::to_string(lineno) + ".");
        } else {
            const auto comma = line.find(',');
            if (comma == std::string::npos) {
                throw UsageError(manifest.string() + ":" + std::to_string(lineno) + ": expected 'path,label'");
            }
            r.path = line.substr(0, comma);
            r.label = line.substr(comma + 1);
            if (lineno == 1 && r.path == "path") continue;
        }
        if (r.path.is_relative()) r.path = base / r.path;
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw UsageError("manifest '" + manifest.string() + "' lists no images");
    return rows;
}

int cmd_train(const Common& c, const std::string& manifest, const std::string& taxonomy_name, const std::string& out,
              const std::string& loss, int epochs, double l2, const std::string& id) {
    const auto tax = classify::ClassTaxonomy::from_name(taxonomy_name);
    const auto rows = read_manifest(manifest);
    auto cfg = load_config(c);
    const auto e = service::build_engine(cfg);
    const auto seg = e->registry.segmenter().fn;
    const auto abcd_cfg = e->abcd_config(cfg.mm_per_pixel);
    std::vector<classify::LabeledSample> data;
    int skipped = 0;
    for (const auto& r : rows) {
        std::size_t label;
        try {
            label = tax.kind == classify::TaxonomyKind::Binary
                        ? static_cast<std::size_t>(eval::truth_from_name(r.label) == eval::Truth::Malignant)
                        : tax.index_of(r.label);
        } catch (const Error& err) {
            throw UsageError(r.path.string() + ": " + err.what());
        }
        try {
            const RasterImage img = imaging::ensure_rgb(codec::read_image(r.path));
            const auto f = abcd::extract(img, seg(img), abcd_cfg);
            data.push_back({classify::raw_features(f), label});
        } catch (const Error& err) {
            ++skipped;
            std::cerr << "skipping " << r.path.string() << ": " << err.what() << "\n";
        }
    }
    classify::TrainParams tp;
    tp.seed = c.seed;
    tp.loss = classify::loss_from_name(loss);
    tp.max_epochs = epochs;
    tp.l2 = l2;
    const auto model = classify::train(data, tax, tp, id.empty() ? "abcd-linear-" + std::string(tax.name()) : id);
    serialize::save_model(model, out);
    Json summary = {{"model", out},
                    {"id", model.id},
                    {"taxonomy", tax.name()},
                    {"samples", data.size()},
                    {"skipped", skipped},
                    {"epochs", model.training.epochs},
                    {"final_loss", model.training.loss_history.back()}};
    std::cout << summary.dump(2) << "\n";
    return kOk;
}

std::vector<fs::path> images_in(const std::string& dir, const char* what) {
    if (!fs::is_directory(dir)) throw UsageError(std::string(what) + " directory '" + dir + "' not found");
    std::vector<fs::path> out;
    for (const auto& de : fs::directory_iterator(dir)) {
        const auto name = de.path().filename().string();
        if (de.is_regular_file() && archive::is_image_member(name)) out.push_back(de.path());
    }
    std::sort(out.begin(), out.end());
    if (out.empty()) throw UsageError(std::string(what) + " directory '" + dir + "' contains no PNG/JPEG images");
    return out;
}


int cmd_evaluate(const Common& c, const std::string& benign_dir, const std::string& malignant_dir,
                 const std::string& out, const std::string& csv, int jobs) {
    const auto benign = images_in(benign_dir, "benign");
    const auto malignant = images_in(malignant_dir, "malignant");
    const auto e = service::build_engine(load_config(c));
    const auto& clf = e->registry.classifier_for(classify::ClassTaxonomy::binary());
    const std::size_t mal = clf.descriptor.taxonomy->index_of("malignant");
    auto ids = [](const std::vector<fs::path>& v) {
        std::vector<std::string> out;
        for (const auto& p : v) out.push_back(p.string());
        return out;
    };
    const auto scorer = [&](const std::string& path) {
        return clf.fn(imaging::ensure_rgb(codec::read_image(path))).probs.at(mal);
    };
    const auto t0 = std::chrono::steady_clock::now();
    const auto scored = eval::score_dataset(ids(benign), ids(malignant), scorer, jobs);
    auto report = eval::sweep(scored.scores);
    report.failures = scored.failures;
    Json j = serialize::eval_report_json(report, scored.scores);
    j["model"] = clf.descriptor.id;
    j["elapsed_ms"] = ms_since(t0);
    emit(j, out);
    if (!csv.empty()) codec::write_file(csv, codec::as_bytes(eval::to_csv(report)));
    std::cerr << "roc_auc=" << report.roc_auc << " items=" << report.n_items
              << " failures=" << report.failures.size() << "\n";
    return kOk;
}

int cmd_explain(const Common& c, const std::string& image, const std::string& out_dir, const ExplainOptions& xo) {
    require_file(image, "image");
    const auto e = service::build_engine(load_config(c));
    const RasterImage img = imaging::ensure_rgb(codec::read_image(image));
    const Json j = write_explanation(*e, img, xo, c.seed, out_dir, "");
    std::cout << j.dump(2) << "\n";
    return kOk;
}

int cmd_serve(const Common& c, int port, const std::string& host) {
    auto cfg = load_config(c);
    if (port >= 0) cfg.port = port;
    if (!host.empty()) cfg.host = host;
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    service::Server server(cfg);
    const int bound = server.start();
    std::cerr << "lesionkit listening on http://" << cfg.host << ":" << bound << "\n";
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lesionkit: dermoscopy lesion analysis"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--config", common.config_path, "service/engine JSON config");
    app.add_option("--seed", common.seed, "RNG seed (training, RISE)")->capture_default_str();
    app.add_option("--model", common.model, "linear model JSON overriding the configured one");

    ExplainOptions xo;
    auto add_explain_opts = [&](CLI::App* sub) {
        sub->add_option("--n-masks", xo.n_masks, "RISE mask count")->capture_default_str()->check(CLI::Range(1, 1000000));
        sub->add_option("--grid", xo.grid, "RISE grid cells per side")->capture_default_str()->check(CLI::Range(2, 64));
        sub->add_option("--p-on", xo.p_on, "RISE cell keep probability")->capture_default_str();
        sub->add_option("--target", xo.target, "explained label")->capture_default_str();
        sub->add_option("--opacity", xo.opacity, "overlay opacity")->capture_default_str();
        sub->add_option("--threads", xo.threads, "worker threads")->capture_default_str()->check(CLI::Range(1, 256));
    };

    std::string image, out, csv, manifest, taxonomy = "binary", loss = "logistic", id, benign_dir, malignant_dir, host;
    double mmpp = 0.0, l2 = 1e-3;
    int epochs = 500, jobs = 1, port = -1;
    bool do_explain = false;

    auto* analyze = app.add_subcommand("analyze", "segment, measure ABCD features and classify one image");
    analyze->add_option("image", image)->required();
    analyze->add_option("--out", out, "directory for report.json and overlay PNGs");
    analyze->add_option("--mm-per-pixel", mmpp, "physical pixel pitch");
    analyze->add_flag("--explain", do_explain, "also write RISE heatmaps");
    add_explain_opts(analyze);

    auto* train = app.add_subcommand("train", "fit a linear model from a labeled manifest");
    train->add_option("manifest", manifest, "CSV 'path,label' or JSONL {path,label}")->required();
    train->add_option("--taxonomy", taxonomy)->capture_default_str()->check(CLI::IsMember({"binary", "multi8"}));
    train->add_option("--out", out, "model JSON path")->required();
    train->add_option("--loss", loss)->capture_default_str()->check(CLI::IsMember({"logistic", "hinge"}));
    train->add_option("--epochs", epochs)->capture_default_str()->check(CLI::Range(1, 1000000));
    train->add_option("--l2", l2)->capture_default_str()->check(CLI::NonNegativeNumber);
    train->add_option("--id", id, "model id");

    auto* evaluate = app.add_subcommand("evaluate", "threshold sweep and ROC over two image folders");
    evaluate->add_option("benign_dir", benign_dir)->required();
    evaluate->add_option("malignant_dir", malignant_dir)->required();
    evaluate->add_option("--out", out, "report JSON path (stdout if absent)");
    evaluate->add_option("--csv", csv, "per-threshold CSV path");
    evaluate->add_option("--jobs", jobs)->capture_default_str()->check(CLI::Range(1, 256));

    auto* explain = app.add_subcommand("explain", "RISE saliency for one image");
    explain->add_option("image", image)->required();
    explain->add_option("--out", out, "output directory")->required();
    add_explain_opts(explain);

    auto* serve = app.add_subcommand("serve", "run the REST service");
    serve->add_option("--port", port, "listen port (config default 5000)");
    serve->add_option("--host", host, "listen address");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsageError;
    }

    try {
        if (*analyze) return cmd_analyze(common, image, out, mmpp, do_explain, xo);
        if (*train) return cmd_train(common, manifest, taxonomy, out, loss, epochs, l2, id);
        if (*evaluate) return cmd_evaluate(common, benign_dir, malignant_dir, out, csv, jobs);
        if (*explain) return cmd_explain(common, image, out, xo);
        if (*serve) return cmd_serve(common, port, host);
    } catch (const UsageError& e) {
        std::cerr << Json{{"error", e.what()}, {"kind", "usage"}}.dump() << "\n";
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << Json{{"error", e.what()}, {"kind", "pipeline"}}.dump() << "\n";
        return kPipelineError;
    }
    return kUsageError;
}
