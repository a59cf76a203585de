#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "lesionkit/archive.hpp"
#include "lesionkit/config.hpp"
#include "lesionkit/errors.hpp"
#include "lesionkit/serialize.hpp"

using namespace lesionkit;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("lesionkit_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

classify::LinearModel small_model() {
    auto m = classify::prior_binary_model();
    m.id = "roundtrip";
    m.training.seed = 9;
    m.training.l2 = 0.5;
    m.training.epochs = 3;
    m.training.samples = 12;
    m.training.loss_history = {3.0, 2.0, 1.0 / 3.0};
    return m;
}

}  // namespace

TEST_CASE("model json round trip is exact") {
    const auto m = small_model();
    const auto back = serialize::model_from_json(serialize::parse(serialize::model_to_json(m).dump(), "model"));
    CHECK(back.id == m.id);
    CHECK(back.taxonomy == m.taxonomy);
    CHECK(back.weights == m.weights);
    CHECK(back.bias == m.bias);
    CHECK(back.standardization.means == m.standardization.means);
    CHECK(back.standardization.scales == m.standardization.scales);
    CHECK(back.training.loss_history == m.training.loss_history);

    const auto dir = scratch_dir("model");
    serialize::save_model(m, dir / "m.json");
    CHECK(serialize::load_model(dir / "m.json").weights == m.weights);
}

TEST_CASE("model json rejects malformed documents") {
    auto j = serialize::model_to_json(small_model());
    SUBCASE("wrong format") { j["format"] = "other"; }
    SUBCASE("short weight row") { j["weights"][0].erase(0); }
    SUBCASE("unknown taxonomy") { j["taxonomy"] = "ternary"; }
    SUBCASE("label mismatch") { j["labels"] = serialize::Json::array({"a", "b"}); }
    CHECK_THROWS_AS(serialize::model_from_json(j), Error);
}

TEST_CASE("parse reports invalid json as InvalidInput") {
    CHECK_THROWS_AS(serialize::parse("{oops", "body"), InvalidInput);
    CHECK(serialize::parse("{\"a\":1}", "body")["a"] == 1);
}

TEST_CASE("confidence response lists only above-uniform labels") {
    classify::Prediction p{{0.25, 0.75}};
    const auto j = serialize::confidence_response("x.png", "m", classify::ClassTaxonomy::binary(), p);
    REQUIRE(j["entries"].size() == 1);
    CHECK(j["entries"][0]["label"] == "malignant");
    CHECK(j["entries"][0]["confidence_pct"].get<double>() == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(j["malignancy_color"]["hex"].get<std::string>().size() == 7);
    const auto b = serialize::binary_response("x.png", p);
    CHECK(b["prediction"].size() == 2);
    CHECK_FALSE(b.contains("error"));
}

TEST_CASE("zip round trip, stored and deflated") {
    std::vector<archive::ZipEntry> in{{"a.png", {1, 2, 3, 4}}, {"dir/b.jpg", std::vector<std::uint8_t>(5000, 7)}};
    for (bool deflate : {false, true}) {
        const auto bytes = archive::write_zip(in, deflate);
        CHECK(archive::looks_like_zip(bytes));
        const auto out = archive::read_zip(bytes);
        REQUIRE(out.size() == 2);
        CHECK(out[0].name == "a.png");
        CHECK(out[1].data == in[1].data);
    }
}

TEST_CASE("zip reader rejects corruption") {
    auto bytes = archive::write_zip({{"a.png", std::vector<std::uint8_t>(100, 1)}}, false);
    SUBCASE("crc") {
        bytes[40] ^= 0xff;
        CHECK_THROWS_AS(archive::read_zip(bytes), InvalidInput);
    }
    SUBCASE("truncated") {
        bytes.resize(bytes.size() / 2);
        CHECK_THROWS_AS(archive::read_zip(bytes), InvalidInput);
    }
    CHECK_FALSE(archive::looks_like_zip(std::vector<std::uint8_t>{'x', 'y'}));
}

TEST_CASE("image member filter") {
    CHECK(archive::is_image_member("a/b.PNG"));
    CHECK(archive::is_image_member("x.jpeg"));
    CHECK_FALSE(archive::is_image_member("__MACOSX/._a.png"));
    CHECK_FALSE(archive::is_image_member(".hidden.png"));
    CHECK_FALSE(archive::is_image_member("notes.txt"));
}

TEST_CASE("config loads, resolves relative paths and rejects unknown keys") {
    const auto dir = scratch_dir("config");
    fs::create_directories(dir / "html");
    serialize::Json j = {{"port", 6001},
                         {"static_root", "html"},
                         {"feedback_store", "fb/feedback.jsonl"},
                         {"mm_per_pixel", 0.05},
                         {"rise", {{"n_masks", 200}, {"seed", 3}}},
                         {"segmentation", {{"max_iters", 120}}}};
    std::ofstream(dir / "cfg.json") << j.dump();
    const auto cfg = config::load(dir / "cfg.json");
    CHECK(cfg.port == 6001);
    CHECK(cfg.static_root == dir / "html");
    CHECK(cfg.feedback_store == dir / "fb/feedback.jsonl");
    CHECK(cfg.rise.n_masks == 200);
    CHECK(cfg.rise.seed == 3);
    CHECK(cfg.segmentation.chan_vese.max_iters == 120);
    CHECK(cfg.source == dir / "cfg.json");

    j["rise"]["bogus"] = 1;
    std::ofstream(dir / "bad.json") << j.dump();
    try {
        config::load(dir / "bad.json");
        FAIL("expected rejection");
    } catch (const InvalidInput& e) {
        CHECK(std::string(e.what()).find("rise.bogus") != std::string::npos);
    }
}

TEST_CASE("config validation fails loudly on missing paths") {
    config::ServiceConfig cfg;
    cfg.static_root = "/nonexistent/lesionkit/html";
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg.static_root = fs::temp_directory_path();
    cfg.data_root = fs::temp_directory_path();
    cfg.binary_model = "/nonexistent/model.json";
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg.binary_model = config::kBuiltinPrior;
    cfg.port = 70000;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
}

TEST_CASE("config json round trip") {
    config::ServiceConfig cfg;
    cfg.port = 7000;
    cfg.rise.grid_cells = 9;
    const auto back = config::from_json(config::to_json(cfg), fs::path("/"));
    CHECK(back.port == 7000);
    CHECK(back.rise.grid_cells == 9);
    CHECK(back.mm_per_pixel == cfg.mm_per_pixel);
}
