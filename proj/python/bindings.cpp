#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "lesionkit/abcd.hpp"
#include "lesionkit/classify.hpp"
#include "lesionkit/codec.hpp"
#include "lesionkit/errors.hpp"
#include "lesionkit/evalharness.hpp"
#include "lesionkit/explain.hpp"
#include "lesionkit/pipeline.hpp"
#include "lesionkit/segmentation.hpp"
#include "lesionkit/serialize.hpp"

namespace py = pybind11;
using namespace lesionkit;
using serialize::Json;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

RasterImage to_image(const U8Array& a) {
    if (a.ndim() == 2) {
        RasterImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), 1);
        std::memcpy(img.data().data(), a.data(), img.data().size());
        return img;
    }
    if (a.ndim() == 3 && (a.shape(2) == 3 || a.shape(2) == 1)) {
        RasterImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), static_cast<int>(a.shape(2)));
        std::memcpy(img.data().data(), a.data(), img.data().size());
        return img;
    }
    throw InvalidInput("image must be an HxW or HxWx3 uint8 array");
}

U8Array from_image(const RasterImage& img) {
    std::vector<py::ssize_t> shape{img.height(), img.width()};
    if (img.channels() != 1) shape.push_back(img.channels());
    U8Array out(shape);
    std::memcpy(out.mutable_data(), img.data().data(), img.data().size());
    return out;
}

BinaryMask to_mask(const py::array& a) {
    auto b = py::array_t<bool, py::array::c_style | py::array::forcecast>::ensure(a);
    if (!b || b.ndim() != 2) throw InvalidInput("mask must be a 2-D array");
    BinaryMask m(static_cast<int>(b.shape(1)), static_cast<int>(b.shape(0)));
    const bool* p = b.data();
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) m.set(x, y, p[static_cast<std::size_t>(y) * m.width() + x]);
    return m;
}

py::array_t<bool> from_mask(const BinaryMask& m) {
    py::array_t<bool> out({m.height(), m.width()});
    bool* p = out.mutable_data();
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) p[static_cast<std::size_t>(y) * m.width() + x] = m.at(x, y);
    return out;
}

py::array_t<double> from_plane(const FloatPlane& f) {
    py::array_t<double> out({f.height(), f.width()});
    std::memcpy(out.mutable_data(), f.values().data(), f.values().size_bytes());
    return out;
}

py::object to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }
Json from_py(const py::handle& o) { return Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>()); }

abcd::AbcdConfig abcd_config(double mm_per_pixel) {
    abcd::AbcdConfig c;
    c.mm_per_pixel = mm_per_pixel;
    return c;
}

classify::LinearModel model_or_prior(const py::object& model) {
    if (model.is_none()) return classify::prior_binary_model();
    if (py::isinstance<py::str>(model)) return serialize::load_model(model.cast<std::string>());
    return serialize::model_from_json(from_py(model));
}

}  // namespace

PYBIND11_MODULE(_lesionkit, m) {
    m.doc() = "Dermoscopy lesion analysis: segmentation, ABCD features, classification, RISE, evaluation";

    py::register_exception<Error>(m, "LesionkitError", PyExc_ValueError);

    m.def("read_image", [](const std::string& path) { return from_image(codec::read_image(path)); }, py::arg("path"));
    m.def("write_png", [](const std::string& path, const U8Array& img) {
        codec::write_file(path, codec::encode_png(to_image(img)));
    }, py::arg("path"), py::arg("image"));

    m.def("segment", [](const U8Array& img, int max_iters, double mu) {
        segmentation::SegmentationConfig cfg;
        cfg.chan_vese.max_iters = max_iters;
        cfg.chan_vese.mu = mu;
        return from_mask(segmentation::segment_lesion(to_image(img), cfg).mask);
    }, py::arg("image"), py::arg("max_iters") = 500, py::arg("mu") = 0.1, "Lesion mask (HxW bool) of an RGB image.");

    m.def("jaccard", [](const py::array& a, const py::array& b) { return segmentation::jaccard(to_mask(a), to_mask(b)); },
          py::arg("truth"), py::arg("pred"));

    m.def("border_irregularity", [](const py::array& mask) { return abcd::border_irregularity(to_mask(mask)); },
          py::arg("mask"));

    m.def("extract_features", [](const U8Array& img, const py::array& mask, double mmpp) {
        const auto f = abcd::extract(to_image(img), to_mask(mask), abcd_config(mmpp));
        Json j = serialize::features_json(f);
        j["scores"] = serialize::scores_json(abcd::project_scores(f));
        return to_py(j);
    }, py::arg("image"), py::arg("mask"), py::arg("mm_per_pixel") = abcd::kDefaultMmPerPixel,
          "ABCD features and display scores as a dict.");

    m.def("raw_features", [](const U8Array& img, const py::array& mask, double mmpp) {
        const auto v = classify::raw_features(abcd::extract(to_image(img), to_mask(mask), abcd_config(mmpp)));
        return std::vector<double>(v.begin(), v.end());
    }, py::arg("image"), py::arg("mask"), py::arg("mm_per_pixel") = abcd::kDefaultMmPerPixel);

    m.def("feature_names", [] {
        std::vector<std::string> out;
        for (auto n : classify::feature_names()) out.emplace_back(n);
        return out;
    });

    m.def("confidence_pct", &classify::confidence_pct, py::arg("p"), py::arg("n_classes"));

    m.def("confidence", [](const std::vector<double>& probs, const std::string& taxonomy) {
        const auto tax = classify::ClassTaxonomy::from_name(taxonomy);
        return to_py(serialize::confidence_response("", "", tax, classify::Prediction{probs}));
    }, py::arg("probs"), py::arg("taxonomy") = "binary");

    m.def("classify", [](const U8Array& img, const py::object& model, double mmpp) {
        auto mdl = std::make_shared<const classify::LinearModel>(model_or_prior(model));
        const auto clf = pipeline::linear_classifier(mdl, pipeline::chan_vese_segmenter({}), abcd_config(mmpp));
        return clf(to_image(img)).probs;
    }, py::arg("image"), py::arg("model") = py::none(), py::arg("mm_per_pixel") = abcd::kDefaultMmPerPixel,
          "Class probabilities; `model` is None (built-in prior), a path or a model dict.");

    m.def("train", [](const std::vector<std::vector<double>>& features, const std::vector<std::size_t>& labels,
                      const std::string& taxonomy, const std::string& loss, double l2, int epochs, std::uint64_t seed,
                      const std::string& id) {
        if (features.size() != labels.size()) throw InvalidInput("features and labels differ in length");
        std::vector<classify::LabeledSample> data;
        for (std::size_t i = 0; i < features.size(); ++i) {
            if (features[i].size() != classify::kFeatureCount) throw InvalidInput("each feature row needs 11 values");
            classify::LabeledSample s;
            std::copy(features[i].begin(), features[i].end(), s.features.begin());
            s.label = labels[i];
            data.push_back(s);
        }
        classify::TrainParams tp;
        tp.loss = classify::loss_from_name(loss);
        tp.l2 = l2;
        tp.max_epochs = epochs;
        tp.seed = seed;
        return to_py(serialize::model_to_json(classify::train(data, classify::ClassTaxonomy::from_name(taxonomy), tp, id)));
    }, py::arg("features"), py::arg("labels"), py::arg("taxonomy") = "binary", py::arg("loss") = "logistic",
          py::arg("l2") = 1e-3, py::arg("epochs") = 500, py::arg("seed") = 42, py::arg("id") = "abcd-linear");

    m.def("rise", [](const U8Array& img, const py::function& classifier, int n_masks, int grid_cells, double p_on,
                     std::uint64_t seed, std::size_t target_class) {
        explain::RiseParams p;
        p.n_masks = n_masks;
        p.grid_cells = grid_cells;
        p.p_on = p_on;
        p.seed = seed;
        p.target_class = target_class;
        p.threads = 1;
        auto fn = [&](const RasterImage& masked) {
            return classify::Prediction{classifier(from_image(masked)).cast<std::vector<double>>()};
        };
        return from_plane(explain::rise(to_image(img), fn, p).values);
    }, py::arg("image"), py::arg("classifier"), py::arg("n_masks") = 1000, py::arg("grid_cells") = 7,
          py::arg("p_on") = 0.5, py::arg("seed") = 42, py::arg("target_class") = 1,
          "Saliency in [0,1]; `classifier` maps an HxWx3 uint8 array to class probabilities.");

    m.def("evaluate", [](const std::vector<double>& benign, const std::vector<double>& malignant) {
        std::vector<eval::LabeledScore> s;
        for (std::size_t i = 0; i < benign.size(); ++i) s.push_back({"b" + std::to_string(i), eval::Truth::Benign, benign[i]});
        for (std::size_t i = 0; i < malignant.size(); ++i) {
            s.push_back({"m" + std::to_string(i), eval::Truth::Malignant, malignant[i]});
        }
        return to_py(serialize::eval_report_json(eval::sweep(s), s));
    }, py::arg("benign_scores"), py::arg("malignant_scores"), "Threshold sweep and ROC report as a dict.");
}
