// mann: train, evaluate and inspect the four-space 2D-PCA + MANN pipeline.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage/validation error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <CLI11.hpp>

#include "mann/dataio.hpp"
#include "mann/ensemble.hpp"
#include "mann/model_io.hpp"
#include "mann/pipeline.hpp"

namespace fs = std::filesystem;
using namespace mann;

namespace {

bool use_color() {
    return ::isatty(1) && std::getenv("MANN_NO_COLOR") == nullptr;
}

std::string bold(const std::string& s) {
    return use_color() ? "\033[1m" + s + "\033[0m" : s;
}

std::string percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", fraction * 100.0);
    return buf;
}

/// Flat key=value run configuration. Flags override file values.
struct RunConfig {
    std::size_t d = 8;
    BlockGrid block_grid{2, 2};
    std::size_t snn_hidden = 16;
    std::size_t cnn_hidden = 4;
    double learning_rate = 0.1;
    std::size_t epochs = 500;
    double threshold = 0.5;
    std::uint64_t master_seed = 0;
    double test_fraction = 0.3;

    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw io_error("cannot open config file " + path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw format_error(path + ": line " + std::to_string(line_no) +
                                   ": expected key=value");
            const std::string key = line.substr(0, eq);
            const std::string value = line.substr(eq + 1);
            set(key, value, path, line_no);
        }
    }

    void set(const std::string& key, const std::string& value,
             const std::string& path, std::size_t line_no) {
        try {
            if (key == "d") d = std::stoul(value);
            else if (key == "block_grid") block_grid = parse_grid(value);
            else if (key == "snn_hidden") snn_hidden = std::stoul(value);
            else if (key == "cnn_hidden") cnn_hidden = std::stoul(value);
            else if (key == "learning_rate") learning_rate = std::stod(value);
            else if (key == "epochs") epochs = std::stoul(value);
            else if (key == "threshold") threshold = std::stod(value);
            else if (key == "master_seed") master_seed = std::stoull(value);
            else if (key == "test_fraction") test_fraction = std::stod(value);
            else
                throw config_error(path + ": line " + std::to_string(line_no) +
                                   ": unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw format_error(path + ": line " + std::to_string(line_no) +
                               ": bad value '" + value + "' for key '" + key + "'");
        }
    }

    static BlockGrid parse_grid(const std::string& s) {
        const auto x = s.find('x');
        if (x == std::string::npos)
            throw std::invalid_argument("grid");
        return {std::stoul(s.substr(0, x)), std::stoul(s.substr(x + 1))};
    }

    void validate() const {
        if (d < 1) throw parameter_error("d must be >= 1");
        if (epochs < 1) throw parameter_error("epochs must be >= 1");
        if (learning_rate <= 0) throw parameter_error("learning_rate must be positive");
        if (threshold <= 0 || threshold >= 1)
            throw parameter_error("threshold must be in (0,1)");
        if (snn_hidden < 1 || cnn_hidden < 1)
            throw parameter_error("hidden sizes must be >= 1");
    }

    PipelineConfig pipeline(std::size_t l, std::size_t jobs) const {
        PipelineConfig cfg;
        cfg.d = {d, d, d, d};
        cfg.block_grid = block_grid;
        cfg.mann.m = 4;
        cfg.mann.l = l;
        cfg.mann.snn_hidden = snn_hidden;
        cfg.mann.cnn_hidden = cnn_hidden;
        cfg.mann.threshold = threshold;
        cfg.mann.train.learning_rate = learning_rate;
        cfg.mann.train.epochs = epochs;
        cfg.mann.master_seed = master_seed;
        cfg.mann.jobs = jobs;
        return cfg;
    }
};

struct LoadedDataset {
    std::vector<Matrix> images;
    std::vector<std::size_t> labels;
    std::vector<std::string> label_names;
};

LoadedDataset load_images(const Manifest& mf) {
    LoadedDataset ds;
    ds.label_names = mf.labels;
    for (const auto& rec : mf.records) {
        ds.images.push_back(load_pgm(resolve_record_path(mf, rec)));
        ds.labels.push_back(mf.label_index(rec.label));
        if (!ds.images.back().same_shape(ds.images.front()))
            throw shape_error(rec.path + ": image shape " + ds.images.back().shape() +
                              " differs from first image " + ds.images.front().shape());
    }
    return ds;
}

void write_manifest(const Manifest& mf, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    out << "path,label\n";
    for (const auto& r : mf.records) out << r.path << "," << r.label << "\n";
}

int cmd_synth(const std::string& out_dir, std::size_t classes, std::size_t per_class,
              std::size_t rows, std::size_t cols, std::uint64_t seed, double noise,
              std::optional<double> test_fraction) {
    const SynthDataset ds = synth_dataset(classes, per_class, rows, cols, seed, noise);
    fs::create_directories(out_dir);

    Manifest mf;
    mf.labels = ds.label_names;
    mf.base_dir = out_dir;
    for (std::size_t i = 0; i < ds.images.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "img_%04zu_%s.pgm", i,
                      ds.label_names[ds.labels[i]].c_str());
        save_pgm(ds.images[i], (fs::path(out_dir) / name).string());
        mf.records.push_back({name, ds.label_names[ds.labels[i]]});
    }
    write_manifest(mf, (fs::path(out_dir) / "manifest.csv").string());
    std::cout << "wrote " << ds.images.size() << " images and manifest.csv to "
              << out_dir << "\n";

    if (test_fraction) {
        const auto [train, test] = split_dataset(mf, *test_fraction, seed);
        write_manifest(train, (fs::path(out_dir) / "train.csv").string());
        write_manifest(test, (fs::path(out_dir) / "test.csv").string());
        std::cout << "split: " << train.records.size() << " train / "
                  << test.records.size() << " test\n";
    }
    return 0;
}

int cmd_train(const std::string& manifest_path, const RunConfig& rc,
              const std::string& out_model, std::size_t jobs) {
    rc.validate();
    const Manifest mf = load_manifest(manifest_path);
    const LoadedDataset ds = load_images(mf);

    const PipelineConfig cfg = rc.pipeline(mf.labels.size(), jobs);
    auto [model, summary] = train_pipeline(ds.images, ds.labels, ds.label_names, cfg);

    std::cout << bold("phase 1 (local) final MSE per SNN:") << "\n";
    for (std::size_t i = 0; i < summary.snn_final_loss.size(); ++i)
        std::cout << "  SNN_" << i + 1 << " ("
                  << orientation_name(all_orientations[i])
                  << "): " << summary.snn_final_loss[i] << "\n";
    std::cout << bold("phase 2 (global) final MSE per CNN:") << "\n";
    for (std::size_t k = 0; k < summary.cnn_final_loss.size(); ++k)
        std::cout << "  CNN_" << k + 1 << " (" << model.labels[k]
                  << "): " << summary.cnn_final_loss[k] << "\n";

    save_model(model, out_model);
    std::cout << "model written to " << out_model << "\n";
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& manifest_path,
             bool tsv, bool confusion, const std::string& dump_predictions) {
    const MannModel model = load_model(model_path);
    const Manifest mf = load_manifest(manifest_path);
    if (mf.labels != model.labels)
        throw config_error("label set mismatch: model has " +
                           std::to_string(model.labels.size()) +
                           " labels, manifest has " + std::to_string(mf.labels.size()) +
                           " (or different names/order)");
    const LoadedDataset ds = load_images(mf);
    const EvaluationReport report = evaluate(model, ds.images, ds.labels);

    if (tsv) {
        for (const auto& m : report.methods)
            std::cout << m.name << "\t" << percent(m.accuracy) << "\n";
    } else {
        std::cout << bold("Classification Methods\tAccuracy\tMacro precision") << "\n";
        for (const auto& m : report.methods)
            std::cout << m.name << "\t" << percent(m.accuracy) << "%\t"
                      << percent(m.macro_precision) << "%\n";
        std::cout << "(" << report.total << " samples)\n";
    }

    if (confusion) {
        for (const auto& m : report.methods) {
            std::cout << bold("confusion matrix: " + m.name)
                      << " (rows = truth, last column = Reject)\n";
            for (std::size_t i = 0; i < model.config.l; ++i) {
                std::cout << model.labels[i];
                for (std::size_t j = 0; j <= model.config.l; ++j)
                    std::cout << "\t" << static_cast<long long>(m.confusion(i, j));
                std::cout << "\n";
            }
        }
    }

    if (!dump_predictions.empty()) {
        std::ofstream out(dump_predictions, std::ios::binary);
        if (!out) throw io_error("cannot write " + dump_predictions);
        out << "index,truth";
        for (const auto& m : report.methods) out << "," << m.name;
        out << "\n";
        for (std::size_t s = 0; s < ds.labels.size(); ++s) {
            out << s << "," << model.labels[ds.labels[s]];
            for (const auto& m : report.methods)
                out << ","
                    << (m.predictions[s] ? model.labels[*m.predictions[s]]
                                         : std::string("REJECT"));
            out << "\n";
        }
    }
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& image_path,
                std::optional<double> threshold) {
    MannModel model = load_model(model_path);
    if (threshold) {
        if (*threshold <= 0 || *threshold >= 1)
            throw parameter_error("threshold must be in (0,1)");
        model.config.threshold = *threshold;
    }
    const Matrix image = load_pgm(image_path);
    const ClassificationOutcome out = classify(model, image);

    double sum = 0.0;
    for (std::size_t k = 0; k < out.scores.size(); ++k) {
        std::cout << model.labels[k] << "\t" << out.scores[k] << "\n";
        sum += out.scores[k];
    }
    // Independent sigmoid CNNs: the sum is informative, not normalized.
    std::cout << "score_sum\t" << sum << "\n";
    std::cout << "threshold\t" << out.threshold_used << "\n";
    if (out.decision)
        std::cout << "decision\t" << model.labels[*out.decision] << "\n";
    else
        std::cout << "decision\tREJECT\n";
    return 0;
}

int cmd_inspect(const std::string& model_path) {
    const MannModel model = load_model(model_path);
    std::cout << bold("config") << "\n";
    std::cout << "  m\t" << model.config.m << "\n";
    std::cout << "  L\t" << model.config.l << "\n";
    std::cout << "  snn_hidden\t" << model.config.snn_hidden << "\n";
    std::cout << "  cnn_hidden\t" << model.config.cnn_hidden << "\n";
    std::cout << "  threshold\t" << model.config.threshold << "\n";
    std::cout << "  master_seed\t" << model.config.master_seed << "\n";
    std::cout << "  labels";
    for (const auto& l : model.labels) std::cout << "\t" << l;
    std::cout << "\n";

    std::cout << bold("bases") << "\n";
    for (const auto& b : model.bases) {
        std::cout << "  " << orientation_name(b.orientation) << "\td=" << b.d;
        if (b.block_grid)
            std::cout << "\tgrid=" << b.block_grid->first << "x"
                      << b.block_grid->second;
        std::cout << "\teigenvalues:";
        for (double v : b.eigenvalues) std::cout << " " << v;
        std::cout << "\n";
    }

    std::cout << bold("networks") << "\n";
    for (std::size_t i = 0; i < model.snns.size(); ++i)
        std::cout << "  SNN_" << i + 1 << "\tw1 " << model.snns[i].w1.shape()
                  << "\tw2 " << model.snns[i].w2.shape() << "\n";
    for (std::size_t k = 0; k < model.cnns.size(); ++k)
        std::cout << "  CNN_" << k + 1 << "\tw1 " << model.cnns[k].w1.shape()
                  << "\tw2 " << model.cnns[k].w2.shape() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"2D-PCA / DiaPCA feature extraction with a MANN ensemble classifier"};
    app.require_subcommand(1);

    std::string config_path, manifest_path, model_path, image_path, out_path;
    std::string dump_predictions;
    std::size_t jobs = 1;
    bool tsv = false, confusion = false;
    std::optional<double> threshold_override;

    RunConfig rc;
    // Collected as strings first so file values load before flag overrides.
    std::map<std::string, std::string> overrides;

    auto add_override = [&](CLI::App* cmd, const std::string& key,
                            const std::string& flag, const std::string& desc) {
        cmd->add_option_function<std::string>(
            flag, [&overrides, key](const std::string& v) { overrides[key] = v; },
            desc);
    };

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic PGM dataset");
    std::size_t classes = 6, per_class = 50, rows = 16, cols = 16;
    std::uint64_t synth_seed = 7;
    double noise = 0.15;
    std::optional<double> synth_split;
    synth->add_option("--out", out_path, "output directory")->required();
    synth->add_option("--classes", classes, "number of classes");
    synth->add_option("--per-class", per_class, "samples per class");
    synth->add_option("--rows", rows, "image rows");
    synth->add_option("--cols", cols, "image cols");
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--noise", noise, "uniform noise amplitude");
    synth->add_option("--test-fraction", synth_split,
                      "also write a stratified train/test split");

    // train
    auto* train = app.add_subcommand("train", "fit bases and run two-phase training");
    train->add_option("manifest", manifest_path, "training manifest CSV")->required();
    train->add_option("--out", out_path, "output model file")->required();
    train->add_option("--config", config_path, "key=value config file");
    train->add_option("--jobs", jobs, "parallel sub-model trainings");
    add_override(train, "master_seed", "--seed", "master seed");
    add_override(train, "d", "--d", "projection axes per orientation");
    add_override(train, "block_grid", "--block-grid", "block grid, e.g. 2x2");
    add_override(train, "snn_hidden", "--snn-hidden", "SNN hidden units");
    add_override(train, "cnn_hidden", "--cnn-hidden", "CNN hidden units");
    add_override(train, "learning_rate", "--learning-rate", "learning rate");
    add_override(train, "epochs", "--epochs", "training epochs");
    add_override(train, "threshold", "--threshold", "decision threshold");

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate a model against a manifest");
    eval->add_option("model", model_path, "model file")->required();
    eval->add_option("manifest", manifest_path, "evaluation manifest CSV")->required();
    eval->add_flag("--tsv", tsv, "machine-readable output");
    eval->add_flag("--confusion", confusion, "print confusion matrices");
    eval->add_option("--dump-predictions", dump_predictions,
                     "write raw per-sample predictions CSV");

    // predict
    auto* predict = app.add_subcommand("predict", "classify a single PGM image");
    predict->add_option("model", model_path, "model file")->required();
    predict->add_option("image", image_path, "PGM image")->required();
    predict->add_option("--threshold", threshold_override,
                        "override the stored decision threshold");

    // inspect
    auto* inspect = app.add_subcommand("inspect", "print model structure");
    inspect->add_option("model", model_path, "model file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (!config_path.empty()) rc.load_file(config_path);
        for (const auto& [key, value] : overrides) rc.set(key, value, "<flag>", 0);

        if (synth->parsed())
            return cmd_synth(out_path, classes, per_class, rows, cols, synth_seed,
                             noise, synth_split);
        if (train->parsed()) return cmd_train(manifest_path, rc, out_path, jobs);
        if (eval->parsed())
            return cmd_eval(model_path, manifest_path, tsv, confusion,
                            dump_predictions);
        if (predict->parsed())
            return cmd_predict(model_path, image_path, threshold_override);
        if (inspect->parsed()) return cmd_inspect(model_path);
    } catch (const parameter_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const format_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const data_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
