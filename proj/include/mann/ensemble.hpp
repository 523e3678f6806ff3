#ifndef MANN_ENSEMBLE_HPP
#define MANN_ENSEMBLE_HPP

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mann/errors.hpp"
#include "mann/features2d.hpp"
#include "mann/matrix.hpp"
#include "mann/neuralnet.hpp"

namespace mann {

struct MannConfig {
    std::size_t m = 4;          // number of feature spaces / SNNs
    std::size_t l = 6;          // number of classes / CNNs
    std::size_t snn_hidden = 16;
    std::size_t cnn_hidden = 4;
    double threshold = 0.5;
    TrainConfig train;
    std::uint64_t master_seed = 0;
    std::size_t jobs = 1;       // parallel sub-model trainings

    void validate() const {
        if (m < 1) throw parameter_error("MannConfig: m must be >= 1");
        if (l < 2) throw parameter_error("MannConfig: l must be >= 2");
        if (threshold <= 0.0 || threshold >= 1.0)
            throw parameter_error("MannConfig: threshold must be in (0,1)");
        if (jobs < 1) throw parameter_error("MannConfig: jobs must be >= 1");
    }
};

/// The full trained ensemble: four projection bases, m SNNs, L CNNs.
struct MannModel {
    MannConfig config;
    std::array<ProjectionBasis, 4> bases;
    std::vector<Mlp> snns; // m nets, each with l outputs
    std::vector<Mlp> cnns; // l nets, each with m inputs and 1 output
    std::vector<std::string> labels;
};

/// R_k: the k-th output of every SNN, the input of CNN_k.
struct CollectiveVector {
    std::size_t k = 0;
    std::vector<double> values; // length m
};

struct ClassificationOutcome {
    std::vector<double> scores;           // length l
    std::optional<std::size_t> decision;  // nullopt = Reject
    double threshold_used = 0.5;
};

/// Shared decision rule: argmax (lowest index wins ties) when the max
/// score exceeds the threshold, otherwise Reject.
inline std::optional<std::size_t> decide(const std::vector<double>& scores,
                                         double threshold) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < scores.size(); ++k)
        if (scores[k] > scores[best]) best = k;
    if (scores.empty() || scores[best] <= threshold) return std::nullopt;
    return best;
}

using SnnOutputs = std::vector<std::vector<double>>; // m x l

inline void check_uniform(const SnnOutputs& outputs, const char* who) {
    if (outputs.empty()) throw shape_error(std::string(who) + ": no SNN outputs");
    for (const auto& row : outputs)
        if (row.size() != outputs[0].size())
            throw shape_error(std::string(who) + ": ragged SNN output lengths");
}

inline std::vector<double> combine_selection(const SnnOutputs& outputs, std::size_t k) {
    if (k >= outputs.size())
        throw parameter_error("combine_selection: index " + std::to_string(k) +
                              " out of range for m = " + std::to_string(outputs.size()));
    return outputs[k];
}

inline std::vector<double> combine_average(const SnnOutputs& outputs) {
    check_uniform(outputs, "combine_average");
    std::vector<double> out(outputs[0].size(), 0.0);
    for (const auto& row : outputs)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += row[i];
    for (double& v : out) v /= static_cast<double>(outputs.size());
    return out;
}

inline std::vector<double> combine_weighted(const SnnOutputs& outputs,
                                            const std::vector<double>& r) {
    check_uniform(outputs, "combine_weighted");
    if (r.size() != outputs.size())
        throw shape_error("combine_weighted: " + std::to_string(r.size()) +
                          " coefficients for m = " + std::to_string(outputs.size()));
    std::vector<double> out(outputs[0].size(), 0.0);
    for (std::size_t k = 0; k < outputs.size(); ++k)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += r[k] * outputs[k][i];
    return out;
}

/// The l x m collective-vector arrangement is the transpose of the
/// m x l SNN output stack.
inline std::vector<CollectiveVector> collective_vectors(const SnnOutputs& outputs) {
    check_uniform(outputs, "collective_vectors");
    const std::size_t l = outputs[0].size();
    std::vector<CollectiveVector> rs(l);
    for (std::size_t k = 0; k < l; ++k) {
        rs[k].k = k;
        rs[k].values.resize(outputs.size());
        for (std::size_t i = 0; i < outputs.size(); ++i)
            rs[k].values[i] = outputs[i][k];
    }
    return rs;
}

using SpaceFeatures = std::vector<std::vector<std::vector<double>>>; // m x N x dim

namespace detail {

/// Run `count` independent jobs on up to `jobs` threads. Each job writes
/// only its own slot, so the result is identical at any thread count.
template <typename Fn>
void run_parallel(std::size_t count, std::size_t jobs, Fn&& fn) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t next = 0;
    const std::size_t workers = std::min(jobs, count);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (std::size_t i = w; i < count; i += workers) fn(i);
        });
    }
    (void)next;
    for (auto& t : pool) t.join();
}

} // namespace detail

/// Phase 1 (local training): each SNN trained independently on its own
/// feature space against one-hot targets. Seed for SNN i is
/// master_seed + i.
inline std::vector<Mlp> train_local(const SpaceFeatures& features,
                                    const std::vector<std::size_t>& labels,
                                    const MannConfig& config) {
    config.validate();
    if (features.size() != config.m)
        throw shape_error("train_local: " + std::to_string(features.size()) +
                          " feature spaces for m = " + std::to_string(config.m));
    for (std::size_t i = 0; i < config.m; ++i)
        if (features[i].size() != labels.size())
            throw shape_error("train_local: space " + std::to_string(i) + " has " +
                              std::to_string(features[i].size()) + " samples, labels " +
                              std::to_string(labels.size()));
    for (std::size_t lbl : labels)
        if (lbl >= config.l)
            throw data_error("train_local: label " + std::to_string(lbl) +
                             " out of range for l = " + std::to_string(config.l));

    std::vector<std::vector<double>> targets(labels.size(),
                                             std::vector<double>(config.l, 0.0));
    for (std::size_t s = 0; s < labels.size(); ++s) targets[s][labels[s]] = 1.0;

    std::vector<Mlp> snns(config.m);
    detail::run_parallel(config.m, config.jobs, [&](std::size_t i) {
        TrainConfig cfg = config.train;
        cfg.seed = config.master_seed + i;
        Mlp net = mlp_init(features[i][0].size(), config.snn_hidden, config.l, cfg.seed);
        snns[i] = mlp_train(std::move(net), features[i], targets, cfg).first;
    });
    return snns;
}

/// Phase 2 (global training): SNNs are frozen; CNN k is trained on the
/// collective vectors R_k with target 1 when the sample belongs to
/// class k. Seed for CNN k is master_seed + 1000 + k.
inline std::vector<Mlp> train_global(const std::vector<Mlp>& snns,
                                     const SpaceFeatures& features,
                                     const std::vector<std::size_t>& labels,
                                     const MannConfig& config) {
    config.validate();
    if (snns.size() != config.m)
        throw config_error("train_global: expected " + std::to_string(config.m) +
                           " trained SNNs, got " + std::to_string(snns.size()));
    for (const Mlp& snn : snns)
        if (snn.n_out != config.l)
            throw config_error("train_global: SNN output count " +
                               std::to_string(snn.n_out) + " does not match l = " +
                               std::to_string(config.l));

    // Frozen SNN outputs per sample, arranged per class.
    std::vector<std::vector<std::vector<double>>> cnn_inputs(
        config.l, std::vector<std::vector<double>>(labels.size()));
    for (std::size_t s = 0; s < labels.size(); ++s) {
        SnnOutputs outs(config.m);
        for (std::size_t i = 0; i < config.m; ++i)
            outs[i] = mlp_forward(snns[i], features[i][s]);
        const auto rs = collective_vectors(outs);
        for (std::size_t k = 0; k < config.l; ++k)
            cnn_inputs[k][s] = rs[k].values;
    }

    std::vector<Mlp> cnns(config.l);
    detail::run_parallel(config.l, config.jobs, [&](std::size_t k) {
        std::vector<std::vector<double>> targets(labels.size(), std::vector<double>(1));
        for (std::size_t s = 0; s < labels.size(); ++s)
            targets[s][0] = labels[s] == k ? 1.0 : 0.0;
        TrainConfig cfg = config.train;
        cfg.seed = config.master_seed + 1000 + k;
        Mlp net = mlp_init(config.m, config.cnn_hidden, 1, cfg.seed);
        cnns[k] = mlp_train(std::move(net), cnn_inputs[k], targets, cfg).first;
    });
    return cnns;
}

inline SnnOutputs snn_outputs_for(const MannModel& model, const Matrix& image) {
    const FeatureSet fs = extract_feature_set(image, model.bases);
    SnnOutputs outs(model.config.m);
    for (std::size_t i = 0; i < model.config.m; ++i)
        outs[i] = mlp_forward(model.snns[i], fs.v[i].values);
    return outs;
}

inline std::vector<double> mann_scores(const MannModel& model, const SnnOutputs& outs) {
    const auto rs = collective_vectors(outs);
    std::vector<double> scores(model.config.l);
    for (std::size_t k = 0; k < model.config.l; ++k)
        scores[k] = mlp_forward(model.cnns[k], rs[k].values)[0];
    return scores;
}

inline ClassificationOutcome classify(const MannModel& model, const Matrix& image) {
    const SnnOutputs outs = snn_outputs_for(model, image);
    ClassificationOutcome outcome;
    outcome.scores = mann_scores(model, outs);
    outcome.threshold_used = model.config.threshold;
    outcome.decision = decide(outcome.scores, outcome.threshold_used);
    return outcome;
}

struct MethodReport {
    std::string name;
    double accuracy = 0.0;        // correct / total
    double macro_precision = 0.0; // per-class precision, averaged
    Matrix confusion;             // l x (l+1); last column counts Rejects
    std::vector<std::optional<std::size_t>> predictions;
};

struct EvaluationReport {
    std::vector<MethodReport> methods; // SNN_1..SNN_m, Average, MANN
    std::size_t total = 0;
};

namespace detail {

inline MethodReport score_method(std::string name, std::size_t l,
                                 const std::vector<std::optional<std::size_t>>& preds,
                                 const std::vector<std::size_t>& truth) {
    MethodReport rep;
    rep.name = std::move(name);
    rep.confusion = Matrix(l, l + 1);
    rep.predictions = preds;
    std::size_t correct = 0;
    for (std::size_t s = 0; s < truth.size(); ++s) {
        const std::size_t col = preds[s] ? *preds[s] : l;
        rep.confusion(truth[s], col) += 1.0;
        if (preds[s] && *preds[s] == truth[s]) ++correct;
    }
    rep.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
    double prec_sum = 0.0;
    std::size_t prec_classes = 0;
    for (std::size_t k = 0; k < l; ++k) {
        double predicted = 0.0;
        for (std::size_t c = 0; c < l; ++c) predicted += rep.confusion(c, k);
        if (predicted > 0.0) {
            prec_sum += rep.confusion(k, k) / predicted;
            ++prec_classes;
        }
    }
    rep.macro_precision = prec_classes ? prec_sum / static_cast<double>(prec_classes) : 0.0;
    return rep;
}

} // namespace detail

/// Per-method accuracy in the fixed row order SNN_1..SNN_m, Average,
/// MANN, each with its confusion matrix (Reject as the extra column).
inline EvaluationReport evaluate(const MannModel& model,
                                 const std::vector<Matrix>& images,
                                 const std::vector<std::size_t>& truth) {
    if (images.empty()) throw data_error("evaluate: empty dataset");
    if (images.size() != truth.size())
        throw shape_error("evaluate: image/label count mismatch");
    for (std::size_t lbl : truth)
        if (lbl >= model.config.l)
            throw data_error("evaluate: label " + std::to_string(lbl) +
                             " out of range for l = " + std::to_string(model.config.l));

    const std::size_t m = model.config.m;
    const std::size_t l = model.config.l;
    const double thr = model.config.threshold;

    std::vector<std::vector<std::optional<std::size_t>>> snn_preds(m);
    std::vector<std::optional<std::size_t>> avg_preds, mann_preds;
    for (const Matrix& image : images) {
        const SnnOutputs outs = snn_outputs_for(model, image);
        for (std::size_t i = 0; i < m; ++i)
            snn_preds[i].push_back(decide(combine_selection(outs, i), thr));
        avg_preds.push_back(decide(combine_average(outs), thr));
        mann_preds.push_back(decide(mann_scores(model, outs), thr));
    }

    EvaluationReport report;
    report.total = images.size();
    for (std::size_t i = 0; i < m; ++i)
        report.methods.push_back(detail::score_method(
            "SNN_" + std::to_string(i + 1), l, snn_preds[i], truth));
    report.methods.push_back(detail::score_method("Average", l, avg_preds, truth));
    report.methods.push_back(detail::score_method("MANN", l, mann_preds, truth));
    return report;
}

} // namespace mann

#endif
