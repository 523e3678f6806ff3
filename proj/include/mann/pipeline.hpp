#ifndef MANN_PIPELINE_HPP
#define MANN_PIPELINE_HPP

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "mann/ensemble.hpp"
#include "mann/errors.hpp"
#include "mann/features2d.hpp"

namespace mann {

/// Everything needed to train the four-space ensemble end to end.
struct PipelineConfig {
    MannConfig mann;
    std::array<std::size_t, 4> d{8, 8, 8, 8}; // per orientation
    BlockGrid block_grid{2, 2};
};

inline std::array<ProjectionBasis, 4> fit_bases(const std::vector<Matrix>& images,
                                                const PipelineConfig& cfg) {
    std::array<ProjectionBasis, 4> bases;
    for (std::size_t i = 0; i < 4; ++i) {
        const Orientation o = all_orientations[i];
        bases[i] = fit_2dpca(images, cfg.d[i], o,
                             o == Orientation::Block
                                 ? std::optional<BlockGrid>(cfg.block_grid)
                                 : std::nullopt);
    }
    return bases;
}

inline SpaceFeatures extract_space_features(const std::vector<Matrix>& images,
                                            const std::array<ProjectionBasis, 4>& bases) {
    SpaceFeatures features(4);
    for (auto& space : features) space.reserve(images.size());
    for (const Matrix& img : images) {
        const FeatureSet fs = extract_feature_set(img, bases);
        for (std::size_t i = 0; i < 4; ++i)
            features[i].push_back(fs.v[i].values);
    }
    return features;
}

struct TrainSummary {
    std::vector<double> snn_final_loss; // per SNN, last epoch
    std::vector<double> cnn_final_loss; // per CNN, last epoch
};

/// Fit the four bases, run local then global training, assemble a model.
inline std::pair<MannModel, TrainSummary>
train_pipeline(const std::vector<Matrix>& images, const std::vector<std::size_t>& labels,
               const std::vector<std::string>& label_names, const PipelineConfig& cfg) {
    if (cfg.mann.m != 4)
        throw config_error("train_pipeline: the four-space pipeline requires m = 4");
    if (label_names.size() != cfg.mann.l)
        throw config_error("train_pipeline: label name count does not match l");
    cfg.mann.validate();

    MannModel model;
    model.config = cfg.mann;
    model.labels = label_names;
    model.bases = fit_bases(images, cfg);

    const SpaceFeatures features = extract_space_features(images, model.bases);
    model.snns = train_local(features, labels, cfg.mann);
    model.cnns = train_global(model.snns, features, labels, cfg.mann);

    // Re-derive final losses for reporting without touching the weights.
    TrainSummary summary;
    std::vector<std::vector<double>> targets(labels.size(),
                                             std::vector<double>(cfg.mann.l, 0.0));
    for (std::size_t s = 0; s < labels.size(); ++s) targets[s][labels[s]] = 1.0;
    for (std::size_t i = 0; i < 4; ++i) {
        double loss = 0.0;
        for (std::size_t s = 0; s < labels.size(); ++s) {
            const auto y = mlp_forward(model.snns[i], features[i][s]);
            for (std::size_t k = 0; k < y.size(); ++k)
                loss += 0.5 * (y[k] - targets[s][k]) * (y[k] - targets[s][k]);
        }
        summary.snn_final_loss.push_back(loss / static_cast<double>(labels.size()));
    }
    for (std::size_t k = 0; k < cfg.mann.l; ++k) {
        double loss = 0.0;
        for (std::size_t s = 0; s < labels.size(); ++s) {
            SnnOutputs outs(4);
            for (std::size_t i = 0; i < 4; ++i)
                outs[i] = mlp_forward(model.snns[i], features[i][s]);
            const auto rs = collective_vectors(outs);
            const double y = mlp_forward(model.cnns[k], rs[k].values)[0];
            const double t = labels[s] == k ? 1.0 : 0.0;
            loss += 0.5 * (y - t) * (y - t);
        }
        summary.cnn_final_loss.push_back(loss / static_cast<double>(labels.size()));
    }
    return {std::move(model), std::move(summary)};
}

} // namespace mann

#endif
