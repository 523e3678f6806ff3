// Acceptance suite: one pass/fail line per criterion, nonzero exit on
// any failure. argv[1] is the path to the mann CLI binary (needed by
// the end-to-end criteria).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "mann/dataio.hpp"
#include "mann/ensemble.hpp"
#include "mann/features2d.hpp"
#include "mann/matrix.hpp"
#include "mann/model_io.hpp"
#include "mann/neuralnet.hpp"
#include "mann/pipeline.hpp"

using namespace mann;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int criterion, const std::string& name, bool pass,
            const std::string& detail = "") {
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << "criterion " << criterion << ": "
              << name;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << std::endl;
    if (!pass) ++failures;
}

Matrix random_symmetric(std::size_t n, SplitMix64& rng) {
    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double v = rng.next_double(-1.0, 1.0);
            s(i, j) = v;
            s(j, i) = v;
        }
    return s;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(const std::string& cmd) { return std::system(cmd.c_str()); }

// --- criteria ---------------------------------------------------------------

void criterion_1_eigensolver() {
    const auto start = std::chrono::steady_clock::now();
    SplitMix64 rng(1001);
    bool ok = true;
    std::string detail;
    for (int trial = 0; trial < 50 && ok; ++trial) {
        const std::size_t n = 2 + rng.next_below(11); // 2..12
        const Matrix s = random_symmetric(n, rng);
        const auto e = jacobi_eigh(s);

        Matrix vl = e.vectors;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) vl(i, j) *= e.values[j];
        const double resid = max_abs(mat_sub(mat_mul(s, e.vectors), vl));
        const double ortho = max_abs(mat_sub(mat_mul(transpose(e.vectors), e.vectors),
                                             Matrix::identity(n)));
        double sum = 0.0;
        for (double v : e.values) sum += v;
        const double tr_err = std::abs(sum - trace(s));

        if (resid > 1e-8 || ortho > 1e-8 || tr_err > 1e-8) {
            ok = false;
            detail = "trial " + std::to_string(trial) + " resid=" +
                     std::to_string(resid) + " ortho=" + std::to_string(ortho) +
                     " trace_err=" + std::to_string(tr_err);
        }
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs >= 1.0) {
        ok = false;
        detail += " runtime " + std::to_string(secs) + "s";
    }
    report(1, "eigensolver residual/orthonormality/trace on 50 random matrices", ok,
           detail.empty() ? "runtime " + std::to_string(secs) + "s" : detail);
}

void criterion_2_pca_identities() {
    SplitMix64 rng(2002);
    std::vector<Matrix> images;
    for (int i = 0; i < 6; ++i) {
        Matrix m(8, 8);
        for (double& v : m.data()) v = rng.next_double();
        images.push_back(std::move(m));
    }

    bool ok = true;
    std::string detail;

    double prev = 1e300;
    double last = 0.0;
    for (std::size_t d = 1; d <= 8; ++d) {
        const auto basis = fit_2dpca(images, d, Orientation::Column);
        const auto f = project_2dpca(images[0], basis);
        const double err = frobenius_norm(mat_sub(images[0], reconstruct(f, basis, 8, 8)));
        if (err > prev + 1e-10) {
            ok = false;
            detail = "reconstruction error increased at d=" + std::to_string(d);
        }
        prev = err;
        last = err;
    }
    if (last > 1e-8) {
        ok = false;
        detail = "d=8 reconstruction not exact: " + std::to_string(last);
    }

    // Independent naive covariance recomputation (scalar loops only).
    const Matrix mean = mean_image(images);
    const Matrix cov = image_covariance(images, mean);
    for (std::size_t p = 0; p < 8 && ok; ++p)
        for (std::size_t q = 0; q < 8 && ok; ++q) {
            double acc = 0.0;
            for (const Matrix& img : images)
                for (std::size_t i = 0; i < 8; ++i)
                    acc += (img(i, p) - mean(i, p)) * (img(i, q) - mean(i, q));
            acc /= 6.0;
            if (std::abs(acc - cov(p, q)) > 1e-12) {
                ok = false;
                detail = "covariance mismatch at (" + std::to_string(p) + "," +
                         std::to_string(q) + ")";
            }
        }
    report(2, "2D-PCA reconstruction monotonicity and covariance recount", ok, detail);
}

void criterion_3_bijections() {
    SplitMix64 rng(3003);
    bool ok = true;
    std::string detail;
    for (int trial = 0; trial < 100 && ok; ++trial) {
        const std::size_t gr = 1 + rng.next_below(3);
        const std::size_t gc = 1 + rng.next_below(3);
        const std::size_t r = gr * (1 + rng.next_below(6));
        const std::size_t c = gc * (1 + rng.next_below(6));
        Matrix m(r, c);
        for (double& v : m.data()) v = rng.next_double();

        auto sorted = [](const Matrix& x) {
            auto d = x.data();
            std::sort(d.begin(), d.end());
            return d;
        };

        const Matrix diag = diagonal_image(m);
        if (sorted(diag) != sorted(m) || diagonal_image_inverse(diag) != m) {
            ok = false;
            detail = "diagonal_image failed at " + m.shape();
        }
        const Matrix blk = block_rearrange(m, {gr, gc});
        if (sorted(blk) != sorted(m) || block_restore(blk, {gr, gc}, r, c) != m) {
            ok = false;
            detail = "block_rearrange failed at " + m.shape();
        }
    }
    report(3, "diagonal/block rearrangements are exact bijections (100 shapes)", ok,
           detail);
}

void criterion_4_gradient_check() {
    SplitMix64 rng(4004);
    bool ok = true;
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n_in = 1 + rng.next_below(5);
        const std::size_t n_hid = 1 + rng.next_below(5);
        const std::size_t n_out = 1 + rng.next_below(4);
        const Mlp net = mlp_init(n_in, n_hid, n_out, rng.next_u64());
        std::vector<double> x(n_in), t(n_out);
        for (double& v : x) v = rng.next_double(-1, 1);
        for (double& v : t) v = rng.next_double();
        const double err = mlp_gradient_check(net, x, t, 1e-5);
        worst = std::max(worst, err);
        if (err >= 1e-4) ok = false;
    }
    report(4, "backprop matches central differences on 20 random nets", ok,
           "max relative error " + std::to_string(worst));
}

void criterion_5_baseline_algebra() {
    SplitMix64 rng(5005);
    bool ok = true;
    std::string detail;
    for (int trial = 0; trial < 20 && ok; ++trial) {
        const std::size_t m = 1 + rng.next_below(5);
        const std::size_t l = 2 + rng.next_below(5);
        SnnOutputs outs(m, std::vector<double>(l));
        for (auto& row : outs)
            for (double& v : row) v = rng.next_double();

        for (std::size_t k = 0; k < m; ++k) {
            std::vector<double> onehot(m, 0.0);
            onehot[k] = 1.0;
            if (combine_weighted(outs, onehot) != combine_selection(outs, k)) {
                ok = false;
                detail = "one-hot weighted != selection";
            }
        }
        const std::vector<double> uniform(m, 1.0 / static_cast<double>(m));
        const auto w = combine_weighted(outs, uniform);
        const auto a = combine_average(outs);
        for (std::size_t i = 0; i < l; ++i)
            if (std::abs(w[i] - a[i]) > 1e-12) {
                ok = false;
                detail = "uniform weighted != average";
            }

        const auto rs = collective_vectors(outs);
        SnnOutputs back(m, std::vector<double>(l));
        for (std::size_t k = 0; k < l; ++k)
            for (std::size_t i = 0; i < m; ++i) back[i][k] = rs[k].values[i];
        if (back != outs) {
            ok = false;
            detail = "collective vectors do not round-trip";
        }
    }
    report(5, "Eq.(1)/(2)/(3) algebra and collective-vector transpose", ok, detail);
}

void criterion_6_two_phase() {
    bool ok = true;
    std::string detail;
    for (auto [m, l] : {std::pair<std::size_t, std::size_t>{2, 3}, {4, 6}}) {
        MannConfig cfg;
        cfg.m = m;
        cfg.l = l;
        cfg.snn_hidden = 5;
        cfg.cnn_hidden = 3;
        cfg.train.epochs = 20;
        cfg.master_seed = 60;

        SplitMix64 rng(600 + m);
        SpaceFeatures features(m);
        std::vector<std::size_t> labels;
        for (std::size_t c = 0; c < l; ++c)
            for (int s = 0; s < 4; ++s) {
                labels.push_back(c);
                for (std::size_t i = 0; i < m; ++i) {
                    std::vector<double> f(6);
                    for (double& v : f) v = rng.next_double();
                    f[c % 6] += 0.5;
                    features[i].push_back(std::move(f));
                }
            }

        const auto snns = train_local(features, labels, cfg);
        const auto before = snns;
        const auto cnns = train_global(snns, features, labels, cfg);

        for (std::size_t i = 0; i < m; ++i)
            if (snns[i].w1 != before[i].w1 || snns[i].w2 != before[i].w2) {
                ok = false;
                detail = "SNN weights changed during global training";
            }
        if (snns.size() != m) ok = false;
        for (const auto& s : snns)
            if (s.n_out != l) {
                ok = false;
                detail = "SNN output dim != l";
            }
        if (cnns.size() != l) ok = false;
        for (const auto& c : cnns)
            if (c.n_in != m || c.n_out != 1) {
                ok = false;
                detail = "CNN dims violate (m in, 1 out)";
            }
    }
    report(6, "two-phase contract: frozen SNNs, dims for (2,3) and (4,6)", ok, detail);
}

struct EvalRows {
    std::map<std::string, double> acc; // method -> accuracy percent
};

EvalRows parse_tsv(const std::string& path) {
    EvalRows rows;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        const auto tab = line.find('\t');
        if (tab == std::string::npos) continue;
        rows.acc[line.substr(0, tab)] = std::stod(line.substr(tab + 1));
    }
    return rows;
}

void criteria_7_8_9_end_to_end(const std::string& cli) {
    const fs::path work =
        fs::temp_directory_path() / ("mann_accept_" + std::to_string(::getpid()));
    fs::remove_all(work);
    fs::create_directories(work);
    const std::string dir = work.string();
    const auto start = std::chrono::steady_clock::now();

    const std::string q = "\"" + cli + "\"";
    bool setup_ok =
        run(q + " synth --out " + dir + " --classes 6 --per-class 50 --rows 16"
                " --cols 16 --seed 7 --noise 0.15 --test-fraction 0.3 > /dev/null") == 0 &&
        run(q + " train " + dir + "/train.csv --out " + dir + "/model_a.json"
                " --seed 7 > /dev/null") == 0 &&
        run(q + " train " + dir + "/train.csv --out " + dir + "/model_b.json"
                " --seed 7 > /dev/null") == 0 &&
        run(q + " eval " + dir + "/model_a.json " + dir + "/test.csv --tsv > " +
            dir + "/eval.tsv") == 0;

    // criterion 7: qualitative Table-1 ordering
    {
        bool ok = setup_ok;
        std::string detail = setup_ok ? "" : "CLI pipeline failed";
        if (ok) {
            const EvalRows rows = parse_tsv(dir + "/eval.tsv");
            double max_snn = 0.0;
            std::ostringstream summary;
            for (int i = 1; i <= 4; ++i) {
                const auto it = rows.acc.find("SNN_" + std::to_string(i));
                if (it == rows.acc.end()) {
                    ok = false;
                    detail = "missing SNN row";
                    break;
                }
                max_snn = std::max(max_snn, it->second);
                summary << "SNN_" << i << "=" << it->second << " ";
            }
            if (ok) {
                const double avg = rows.acc.at("Average");
                const double mann_acc = rows.acc.at("MANN");
                summary << "Average=" << avg << " MANN=" << mann_acc;
                detail = summary.str();
                if (!(mann_acc >= avg)) ok = false;
                if (!(avg >= max_snn - 2.0)) ok = false;
                for (int i = 1; i <= 4; ++i)
                    if (!(rows.acc.at("SNN_" + std::to_string(i)) < mann_acc)) ok = false;
            }
            const double secs = std::chrono::duration<double>(
                                    std::chrono::steady_clock::now() - start)
                                    .count();
            if (secs >= 60.0) {
                ok = false;
                detail += " runtime " + std::to_string(secs) + "s";
            }
        }
        report(7, "synthetic Table-1 ordering: MANN >= Average >= SNNs", ok, detail);
    }

    // criterion 8: end-to-end determinism and round-trip
    {
        bool ok = setup_ok;
        std::string detail;
        if (ok && slurp(dir + "/model_a.json") != slurp(dir + "/model_b.json")) {
            ok = false;
            detail = "repeated training produced different model files";
        }
        if (ok) {
            const MannModel model = load_model(dir + "/model_a.json");
            const std::string rt = dir + "/model_rt.json";
            save_model(model, rt);
            const MannModel reloaded = load_model(rt);
            const auto probe = synth_dataset(6, 2, 16, 16, 99, 0.2);
            for (const auto& img : probe.images) {
                const auto a = classify(model, img);
                const auto b = classify(reloaded, img);
                if (a.scores != b.scores || a.decision != b.decision) {
                    ok = false;
                    detail = "round-trip changed classify output";
                }
            }
        }
        report(8, "training determinism and model round-trip", ok, detail);
    }

    // criterion 9: reject path and decision contract
    {
        bool ok = setup_ok;
        std::string detail;
        if (ok) {
            const MannModel model = load_model(dir + "/model_a.json");
            MannModel strict = model;
            strict.config.threshold = 0.999;

            const Manifest test = load_manifest(dir + "/test.csv");
            std::size_t rejects = 0;
            for (const auto& rec : test.records) {
                const Matrix img = load_pgm(resolve_record_path(test, rec));
                const auto out = classify(strict, img);
                if (!out.decision) ++rejects;
                // decision always obeys the documented rule
                if (out.decision != decide(out.scores, out.threshold_used)) {
                    ok = false;
                    detail = "decision deviates from argmax/threshold rule";
                }
            }
            if (rejects == 0) {
                ok = false;
                detail = "threshold 0.999 rejected nothing";
            } else if (detail.empty()) {
                detail = std::to_string(rejects) + "/" +
                         std::to_string(test.records.size()) + " rejected";
            }

            // tie-break contract: lowest index wins among equal maxima
            if (decide({0.1, 0.8, 0.8}, 0.5) != std::optional<std::size_t>(1)) {
                ok = false;
                detail = "tie-break is not lowest-index";
            }
            if (decide({0.4, 0.4}, 0.5).has_value()) {
                ok = false;
                detail = "threshold rule accepted a below-threshold maximum";
            }
        }
        report(9, "reject path at threshold 0.999 and tie-break contract", ok, detail);
    }

    fs::remove_all(work);
}

} // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "./mann";

    criterion_1_eigensolver();
    criterion_2_pca_identities();
    criterion_3_bijections();
    criterion_4_gradient_check();
    criterion_5_baseline_algebra();
    criterion_6_two_phase();
    criteria_7_8_9_end_to_end(cli);

    if (failures) {
        std::cout << failures << " criterion(s) failed" << std::endl;
        return 1;
    }
    std::cout << "all criteria passed" << std::endl;
    return 0;
}
