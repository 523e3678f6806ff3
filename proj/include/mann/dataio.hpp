#ifndef MANN_DATAIO_HPP
#define MANN_DATAIO_HPP

#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mann/errors.hpp"
#include "mann/matrix.hpp"
#include "mann/rng.hpp"

namespace mann {

// ---------------------------------------------------------------------------
// PGM (Netpbm P2/P5)
// ---------------------------------------------------------------------------

namespace detail {

/// Reads the next PGM header token, skipping whitespace and '#' comments.
inline std::string pgm_token(std::istream& in, const std::string& path) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {}
            continue;
        }
        if (std::isspace(ch)) continue;
        tok.push_back(static_cast<char>(ch));
        while ((ch = in.peek()) != EOF && !std::isspace(ch) && ch != '#')
            tok.push_back(static_cast<char>(in.get()));
        return tok;
    }
    throw format_error(path + ": truncated PGM header at byte offset " +
                       std::to_string(static_cast<long long>(in.tellg())));
}

inline std::size_t pgm_number(std::istream& in, const std::string& path,
                              const char* what) {
    const std::string tok = pgm_token(in, path);
    std::size_t value = 0;
    for (char c : tok) {
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw format_error(path + ": bad " + what + " '" + tok + "'");
        value = value * 10 + static_cast<std::size_t>(c - '0');
    }
    if (tok.empty()) throw format_error(path + std::string(": missing ") + what);
    return value;
}

} // namespace detail

/// Load a PGM image, values linearly scaled to [0,1] by pixel/maxval.
inline Matrix load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw io_error("cannot open " + path);

    char magic[2] = {0, 0};
    in.read(magic, 2);
    const bool binary = magic[0] == 'P' && magic[1] == '5';
    if (!binary && !(magic[0] == 'P' && magic[1] == '2'))
        throw format_error(path + ": bad magic at byte offset 0, expected P2 or P5");

    const std::size_t cols = detail::pgm_number(in, path, "width");
    const std::size_t rows = detail::pgm_number(in, path, "height");
    const std::size_t maxval = detail::pgm_number(in, path, "maxval");
    if (maxval == 0 || maxval > 65535)
        throw format_error(path + ": maxval " + std::to_string(maxval) +
                           " out of range [1, 65535]");
    if (rows == 0 || cols == 0)
        throw format_error(path + ": zero image dimension");

    Matrix img(rows, cols);
    const double denom = static_cast<double>(maxval);
    if (binary) {
        // Exactly one whitespace byte separates maxval from the payload.
        in.get();
        const std::size_t bytes_per = maxval > 255 ? 2 : 1;
        std::vector<unsigned char> buf(rows * cols * bytes_per);
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size()));
        if (static_cast<std::size_t>(in.gcount()) != buf.size())
            throw format_error(path + ": truncated P5 payload at byte offset " +
                               std::to_string(static_cast<long long>(in.tellg())));
        for (std::size_t i = 0; i < rows * cols; ++i) {
            const std::size_t px = bytes_per == 2
                ? (static_cast<std::size_t>(buf[2 * i]) << 8) | buf[2 * i + 1]
                : buf[i];
            img.data()[i] = static_cast<double>(px) / denom;
        }
    } else {
        for (std::size_t i = 0; i < rows * cols; ++i) {
            const std::size_t px = detail::pgm_number(in, path, "pixel");
            if (px > maxval)
                throw format_error(path + ": pixel " + std::to_string(px) +
                                   " exceeds maxval " + std::to_string(maxval));
            img.data()[i] = static_cast<double>(px) / denom;
        }
    }
    return img;
}

/// Write a [0,1]-valued matrix as PGM with maxval 255.
inline void save_pgm(const Matrix& img, const std::string& path, bool binary = true) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    out << (binary ? "P5" : "P2") << "\n"
        << img.cols() << " " << img.rows() << "\n255\n";
    for (std::size_t i = 0; i < img.size(); ++i) {
        double v = img.data()[i];
        v = std::min(1.0, std::max(0.0, v));
        const unsigned px = static_cast<unsigned>(std::lround(v * 255.0));
        if (binary)
            out.put(static_cast<char>(px));
        else
            out << px << (i + 1 == img.size() ? "\n" : ((i + 1) % img.cols() ? " " : "\n"));
    }
    if (!out) throw io_error("write failed for " + path);
}

// ---------------------------------------------------------------------------
// Manifests and splits
// ---------------------------------------------------------------------------

struct ManifestRecord {
    std::string path;
    std::string label;
};

struct Manifest {
    std::vector<ManifestRecord> records;
    std::vector<std::string> labels; // ordered by first appearance; index = class id
    std::string base_dir;            // paths resolve against this

    std::size_t label_index(const std::string& name) const {
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == name) return i;
        throw data_error("unknown label: " + name);
    }
};

/// CSV with header "path,label"; relative paths resolve against the
/// manifest's directory.
inline Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);

    Manifest mf;
    mf.base_dir = std::filesystem::path(path).parent_path().string();

    std::string line;
    if (!std::getline(in, line)) throw format_error(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "path,label")
        throw format_error(path + ": missing header 'path,label', got '" + line + "'");

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw format_error(path + ": line " + std::to_string(line_no) +
                               ": expected exactly 2 columns");
        ManifestRecord rec{line.substr(0, comma), line.substr(comma + 1)};
        if (rec.path.empty() || rec.label.empty())
            throw format_error(path + ": line " + std::to_string(line_no) +
                               ": empty field");
        bool known = false;
        for (const auto& l : mf.labels) known = known || l == rec.label;
        if (!known) mf.labels.push_back(rec.label);
        mf.records.push_back(std::move(rec));
    }
    if (mf.records.empty()) throw data_error(path + ": manifest has no records");
    return mf;
}

inline std::string resolve_record_path(const Manifest& mf, const ManifestRecord& rec) {
    const std::filesystem::path p(rec.path);
    if (p.is_absolute() || mf.base_dir.empty()) return rec.path;
    return (std::filesystem::path(mf.base_dir) / p).string();
}

/// Stratified split: per class, floor(test_fraction * count) records go
/// to test, chosen by seeded shuffle. Both sides keep the original
/// manifest order of their records.
inline std::pair<Manifest, Manifest> split_dataset(const Manifest& mf,
                                                   double test_fraction,
                                                   std::uint64_t seed) {
    if (test_fraction <= 0.0 || test_fraction >= 1.0)
        throw parameter_error("split_dataset: test_fraction must be in (0,1)");

    std::vector<bool> in_test(mf.records.size(), false);
    SplitMix64 rng(seed);
    for (std::size_t c = 0; c < mf.labels.size(); ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < mf.records.size(); ++i)
            if (mf.records[i].label == mf.labels[c]) members.push_back(i);
        const std::size_t n_test = static_cast<std::size_t>(
            std::floor(test_fraction * static_cast<double>(members.size())));
        if (members.size() - n_test == 0)
            throw data_error("split_dataset: class '" + mf.labels[c] +
                             "' left with no training samples");
        const auto perm = shuffled_indices(members.size(), rng);
        for (std::size_t j = 0; j < n_test; ++j) in_test[members[perm[j]]] = true;
    }

    Manifest train{ {}, mf.labels, mf.base_dir };
    Manifest test{ {}, mf.labels, mf.base_dir };
    for (std::size_t i = 0; i < mf.records.size(); ++i)
        (in_test[i] ? test : train).records.push_back(mf.records[i]);
    return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Synthetic dataset
// ---------------------------------------------------------------------------

struct SynthDataset {
    std::vector<Matrix> images;
    std::vector<std::size_t> labels;
    std::vector<Matrix> prototypes; // one per class
    std::vector<std::string> label_names;
};

/// Deterministic prototype bank. Classes come in pairs: a strong
/// vertical carrier grating identifies the pair everywhere, and a faint
/// oriented wiggle (horizontal, vertical or diagonal, alternating per
/// pair) separates the two classes inside it. The wiggle's orientation
/// decides which presentation spaces resolve the pair easily, so each
/// orientation discriminates a different subset of classes.
inline Matrix synth_prototype(std::size_t c, std::size_t rows, std::size_t cols) {
    Matrix p(rows, cols);
    const double pi = 3.14159265358979323846;
    const std::size_t pair = c / 2;
    const double sign = (c % 2 == 0) ? 1.0 : -1.0;
    const double carrier_freq = 1.0 + static_cast<double>(pair);
    const double wiggle_amp = 0.015;
    const double wiggle_freq = 5.0;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const double fi = static_cast<double>(i);
            const double fj = static_cast<double>(j);
            double v = 0.5 + 0.22 * std::cos(2.0 * pi * carrier_freq * fi /
                                             static_cast<double>(rows));
            switch (pair % 3) {
                case 0: // horizontal wiggle
                    v += sign * wiggle_amp *
                         std::cos(2.0 * pi * wiggle_freq * fj /
                                  static_cast<double>(cols));
                    break;
                case 1: // vertical wiggle
                    v += sign * wiggle_amp *
                         std::cos(2.0 * pi * wiggle_freq * fi /
                                  static_cast<double>(rows));
                    break;
                case 2: // diagonal wiggle
                    v += sign * wiggle_amp *
                         std::cos(2.0 * pi * wiggle_freq * (fi + fj) /
                                  static_cast<double>(rows));
                    break;
            }
            p(i, j) = std::min(1.0, std::max(0.0, v));
        }
    }
    return p;
}

/// Class c's samples are prototype(c) plus uniform noise in
/// [-noise, +noise], clamped to [0,1]. Deterministic per seed.
inline SynthDataset synth_dataset(std::size_t classes, std::size_t per_class,
                                  std::size_t rows, std::size_t cols,
                                  std::uint64_t seed, double noise) {
    if (classes < 2)
        throw parameter_error("synth_dataset: need at least 2 classes");
    if (per_class < 1)
        throw parameter_error("synth_dataset: per_class must be >= 1");
    if (noise < 0.0)
        throw parameter_error("synth_dataset: noise must be >= 0");

    SynthDataset ds;
    SplitMix64 rng(seed);
    for (std::size_t c = 0; c < classes; ++c) {
        ds.prototypes.push_back(synth_prototype(c, rows, cols));
        ds.label_names.push_back("class" + std::to_string(c));
    }
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t s = 0; s < per_class; ++s) {
            Matrix img = ds.prototypes[c];
            for (double& v : img.data()) {
                v += rng.next_double(-noise, noise);
                v = std::min(1.0, std::max(0.0, v));
            }
            ds.images.push_back(std::move(img));
            ds.labels.push_back(c);
        }
    }
    return ds;
}

/// Brute-force nearest-prototype classifier, used as an independent
/// oracle for the synthetic generator's separability.
inline std::size_t nearest_prototype(const Matrix& image,
                                     const std::vector<Matrix>& prototypes) {
    std::size_t best = 0;
    double best_d = frobenius_norm(mat_sub(image, prototypes[0]));
    for (std::size_t c = 1; c < prototypes.size(); ++c) {
        const double d = frobenius_norm(mat_sub(image, prototypes[c]));
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

} // namespace mann

#endif
