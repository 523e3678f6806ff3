#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "mann/dataio.hpp"
#include "mann/model_io.hpp"
#include "mann/pipeline.hpp"

using namespace mann;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

MannModel small_model() {
    const auto ds = synth_dataset(3, 6, 8, 8, 5, 0.05);
    PipelineConfig cfg;
    cfg.d = {3, 3, 3, 3};
    cfg.mann.l = 3;
    cfg.mann.snn_hidden = 6;
    cfg.mann.cnn_hidden = 3;
    cfg.mann.train.epochs = 40;
    cfg.mann.master_seed = 5;
    return train_pipeline(ds.images, ds.labels, ds.label_names, cfg).first;
}

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("mann_model_io_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

} // namespace

TEST_CASE("model save/load round-trip") {
    TempDir dir;
    const MannModel model = small_model();
    const auto p1 = dir.file("m1.json"), p2 = dir.file("m2.json");
    save_model(model, p1);
    const MannModel loaded = load_model(p1);
    save_model(loaded, p2);

    SECTION("second save is byte-identical") {
        CHECK(slurp(p1) == slurp(p2));
    }
    SECTION("weights survive bit-exactly") {
        for (std::size_t i = 0; i < model.snns.size(); ++i) {
            CHECK(model.snns[i].w1 == loaded.snns[i].w1);
            CHECK(model.snns[i].w2 == loaded.snns[i].w2);
        }
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(model.bases[i].axes == loaded.bases[i].axes);
            CHECK(model.bases[i].eigenvalues == loaded.bases[i].eigenvalues);
        }
    }
    SECTION("classify outputs identical on arbitrary input") {
        const auto ds = synth_dataset(3, 2, 8, 8, 99, 0.3);
        for (const auto& img : ds.images) {
            const auto a = classify(model, img);
            const auto b = classify(loaded, img);
            CHECK(a.scores == b.scores);
            CHECK(a.decision == b.decision);
        }
    }
}

TEST_CASE("model load failure modes") {
    TempDir dir;
    const MannModel model = small_model();
    const auto p = dir.file("m.json");
    save_model(model, p);

    SECTION("version mismatch") {
        std::string text = slurp(p);
        const auto pos = text.find("mann-model/1");
        text.replace(pos, 12, "mann-model/9");
        std::ofstream(dir.file("bad.json"), std::ios::binary) << text;
        CHECK_THROWS_AS(load_model(dir.file("bad.json")), config_error);
    }
    SECTION("truncated file leaves no partial model") {
        const std::string text = slurp(p);
        std::ofstream(dir.file("trunc.json"), std::ios::binary)
            << text.substr(0, text.size() / 2);
        CHECK_THROWS_AS(load_model(dir.file("trunc.json")), format_error);
    }
    SECTION("missing file") {
        CHECK_THROWS_AS(load_model(dir.file("nope.json")), io_error);
    }
    SECTION("no stray temp file after save") {
        CHECK_FALSE(fs::exists(p + ".tmp"));
    }
}
