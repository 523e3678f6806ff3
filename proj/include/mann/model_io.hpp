#ifndef MANN_MODEL_IO_HPP
#define MANN_MODEL_IO_HPP

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mann/ensemble.hpp"
#include "mann/errors.hpp"

namespace mann {

inline constexpr const char* model_format_version = "mann-model/1";

namespace detail {

using json = nlohmann::ordered_json;

/// Doubles travel as C hex-float strings: lossless and locale-free.
inline std::string to_hex(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

inline double from_hex(const json& j) {
    if (!j.is_string()) throw format_error("model file: expected hex-float string");
    const std::string s = j.get<std::string>();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw format_error("model file: bad hex-float '" + s + "'");
    return v;
}

inline json doubles_out(const std::vector<double>& vs) {
    json arr = json::array();
    for (double v : vs) arr.push_back(to_hex(v));
    return arr;
}

inline std::vector<double> doubles_in(const json& arr) {
    if (!arr.is_array()) throw format_error("model file: expected array of doubles");
    std::vector<double> vs;
    vs.reserve(arr.size());
    for (const auto& j : arr) vs.push_back(from_hex(j));
    return vs;
}

inline json matrix_out(const Matrix& m) {
    json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    j["data"] = doubles_out(m.data());
    return j;
}

inline Matrix matrix_in(const json& j) {
    const std::size_t rows = j.at("rows").get<std::size_t>();
    const std::size_t cols = j.at("cols").get<std::size_t>();
    return Matrix(rows, cols, doubles_in(j.at("data")));
}

inline json mlp_out(const Mlp& net) {
    json j;
    j["n_in"] = net.n_in;
    j["n_hidden"] = net.n_hidden;
    j["n_out"] = net.n_out;
    j["w1"] = matrix_out(net.w1);
    j["w2"] = matrix_out(net.w2);
    return j;
}

inline Mlp mlp_in(const json& j) {
    Mlp net;
    net.n_in = j.at("n_in").get<std::size_t>();
    net.n_hidden = j.at("n_hidden").get<std::size_t>();
    net.n_out = j.at("n_out").get<std::size_t>();
    net.w1 = matrix_in(j.at("w1"));
    net.w2 = matrix_in(j.at("w2"));
    if (net.w1.rows() != net.n_hidden || net.w1.cols() != net.n_in + 1 ||
        net.w2.rows() != net.n_out || net.w2.cols() != net.n_hidden + 1)
        throw format_error("model file: MLP weight shapes inconsistent with dims");
    return net;
}

inline json basis_out(const ProjectionBasis& b) {
    json j;
    j["orientation"] = orientation_name(b.orientation);
    j["d"] = b.d;
    j["mean"] = matrix_out(b.mean);
    j["axes"] = matrix_out(b.axes);
    j["eigenvalues"] = doubles_out(b.eigenvalues);
    if (b.block_grid)
        j["block_grid"] = {b.block_grid->first, b.block_grid->second};
    else
        j["block_grid"] = nullptr;
    return j;
}

inline ProjectionBasis basis_in(const json& j) {
    ProjectionBasis b;
    b.orientation = orientation_from_name(j.at("orientation").get<std::string>());
    b.d = j.at("d").get<std::size_t>();
    b.mean = matrix_in(j.at("mean"));
    b.axes = matrix_in(j.at("axes"));
    b.eigenvalues = doubles_in(j.at("eigenvalues"));
    const auto& bg = j.at("block_grid");
    if (!bg.is_null())
        b.block_grid = BlockGrid{bg.at(0).get<std::size_t>(), bg.at(1).get<std::size_t>()};
    return b;
}

} // namespace detail

inline void save_model(const MannModel& model, const std::string& path) {
    using detail::json;
    json doc;
    doc["format_version"] = model_format_version;

    json cfg;
    cfg["m"] = model.config.m;
    cfg["l"] = model.config.l;
    cfg["snn_hidden"] = model.config.snn_hidden;
    cfg["cnn_hidden"] = model.config.cnn_hidden;
    cfg["threshold"] = detail::to_hex(model.config.threshold);
    cfg["learning_rate"] = detail::to_hex(model.config.train.learning_rate);
    cfg["epochs"] = model.config.train.epochs;
    cfg["shuffle"] = model.config.train.shuffle;
    cfg["master_seed"] = model.config.master_seed;
    cfg["prng"] = "splitmix64";
    doc["config"] = cfg;

    doc["labels"] = model.labels;
    doc["bases"] = detail::json::array();
    for (const auto& b : model.bases) doc["bases"].push_back(detail::basis_out(b));
    doc["snns"] = detail::json::array();
    for (const auto& net : model.snns) doc["snns"].push_back(detail::mlp_out(net));
    doc["cnns"] = detail::json::array();
    for (const auto& net : model.cnns) doc["cnns"].push_back(detail::mlp_out(net));

    // Temp-file-then-rename keeps the target atomic.
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw io_error("cannot write " + tmp);
        out << doc.dump(2) << "\n";
        if (!out) throw io_error("write failed for " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw io_error("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

inline MannModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    detail::json doc;
    try {
        in >> doc;
    } catch (const detail::json::exception& e) {
        throw format_error(path + ": malformed model file: " + e.what());
    }

    try {
        const std::string version = doc.at("format_version").get<std::string>();
        if (version != model_format_version)
            throw config_error(path + ": unsupported format version '" + version +
                               "', expected '" + model_format_version + "'");

        MannModel model;
        const auto& cfg = doc.at("config");
        model.config.m = cfg.at("m").get<std::size_t>();
        model.config.l = cfg.at("l").get<std::size_t>();
        model.config.snn_hidden = cfg.at("snn_hidden").get<std::size_t>();
        model.config.cnn_hidden = cfg.at("cnn_hidden").get<std::size_t>();
        model.config.threshold = detail::from_hex(cfg.at("threshold"));
        model.config.train.learning_rate = detail::from_hex(cfg.at("learning_rate"));
        model.config.train.epochs = cfg.at("epochs").get<std::size_t>();
        model.config.train.shuffle = cfg.at("shuffle").get<bool>();
        model.config.master_seed = cfg.at("master_seed").get<std::uint64_t>();
        model.config.validate();

        model.labels = doc.at("labels").get<std::vector<std::string>>();
        const auto& bases = doc.at("bases");
        if (bases.size() != 4)
            throw format_error(path + ": expected 4 bases, got " +
                               std::to_string(bases.size()));
        for (std::size_t i = 0; i < 4; ++i)
            model.bases[i] = detail::basis_in(bases[i]);
        for (const auto& j : doc.at("snns")) model.snns.push_back(detail::mlp_in(j));
        for (const auto& j : doc.at("cnns")) model.cnns.push_back(detail::mlp_in(j));

        if (model.snns.size() != model.config.m)
            throw format_error(path + ": SNN count does not match config m");
        if (model.cnns.size() != model.config.l)
            throw format_error(path + ": CNN count does not match config l");
        if (model.labels.size() != model.config.l)
            throw format_error(path + ": label count does not match config l");
        return model;
    } catch (const detail::json::exception& e) {
        throw format_error(path + ": malformed model file: " + e.what());
    }
}

} // namespace mann

#endif
