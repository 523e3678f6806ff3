#ifndef MANN_NEURALNET_HPP
#define MANN_NEURALNET_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mann/errors.hpp"
#include "mann/matrix.hpp"
#include "mann/rng.hpp"

namespace mann {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// 3-layer perceptron (input, hidden, output), sigmoid units throughout.
/// The last column of each weight matrix is the bias.
struct Mlp {
    std::size_t n_in = 0;
    std::size_t n_hidden = 0;
    std::size_t n_out = 0;
    Matrix w1; // n_hidden x (n_in + 1)
    Matrix w2; // n_out x (n_hidden + 1)
};

struct TrainConfig {
    double learning_rate = 0.1;
    std::size_t epochs = 500;
    std::uint64_t seed = 0;
    bool shuffle = true;
};

/// Weights i.i.d. uniform in [-0.5, 0.5] from SplitMix64; biases zero.
inline Mlp mlp_init(std::size_t n_in, std::size_t n_hidden, std::size_t n_out,
                    std::uint64_t seed) {
    if (n_in == 0 || n_hidden == 0 || n_out == 0)
        throw parameter_error("mlp_init: layer sizes must be positive");
    Mlp m;
    m.n_in = n_in;
    m.n_hidden = n_hidden;
    m.n_out = n_out;
    m.w1 = Matrix(n_hidden, n_in + 1);
    m.w2 = Matrix(n_out, n_hidden + 1);
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i < n_hidden; ++i)
        for (std::size_t j = 0; j < n_in; ++j)
            m.w1(i, j) = rng.next_double(-0.5, 0.5);
    for (std::size_t i = 0; i < n_out; ++i)
        for (std::size_t j = 0; j < n_hidden; ++j)
            m.w2(i, j) = rng.next_double(-0.5, 0.5);
    return m;
}

inline std::vector<double> mlp_hidden(const Mlp& m, const std::vector<double>& x) {
    std::vector<double> h(m.n_hidden);
    for (std::size_t i = 0; i < m.n_hidden; ++i) {
        double z = m.w1(i, m.n_in); // bias
        for (std::size_t j = 0; j < m.n_in; ++j) z += m.w1(i, j) * x[j];
        h[i] = sigmoid(z);
    }
    return h;
}

inline std::vector<double> mlp_forward(const Mlp& m, const std::vector<double>& x) {
    if (x.size() != m.n_in)
        throw shape_error("mlp_forward: input length " + std::to_string(x.size()) +
                          ", expected " + std::to_string(m.n_in));
    const std::vector<double> h = mlp_hidden(m, x);
    std::vector<double> y(m.n_out);
    for (std::size_t k = 0; k < m.n_out; ++k) {
        double z = m.w2(k, m.n_hidden);
        for (std::size_t j = 0; j < m.n_hidden; ++j) z += m.w2(k, j) * h[j];
        y[k] = sigmoid(z);
    }
    return y;
}

namespace detail {

/// Backprop for one sample under loss 0.5 * sum (y - t)^2.
/// Returns the sample loss; accumulates nothing, writes gradients.
inline double mlp_gradients(const Mlp& m, const std::vector<double>& x,
                            const std::vector<double>& t, Matrix& g1, Matrix& g2) {
    const std::vector<double> h = mlp_hidden(m, x);
    std::vector<double> y(m.n_out), delta2(m.n_out);
    double loss = 0.0;
    for (std::size_t k = 0; k < m.n_out; ++k) {
        double z = m.w2(k, m.n_hidden);
        for (std::size_t j = 0; j < m.n_hidden; ++j) z += m.w2(k, j) * h[j];
        y[k] = sigmoid(z);
        const double err = y[k] - t[k];
        loss += 0.5 * err * err;
        delta2[k] = err * y[k] * (1.0 - y[k]);
    }
    for (std::size_t k = 0; k < m.n_out; ++k) {
        for (std::size_t j = 0; j < m.n_hidden; ++j) g2(k, j) = delta2[k] * h[j];
        g2(k, m.n_hidden) = delta2[k];
    }
    for (std::size_t j = 0; j < m.n_hidden; ++j) {
        double back = 0.0;
        for (std::size_t k = 0; k < m.n_out; ++k) back += delta2[k] * m.w2(k, j);
        const double delta1 = back * h[j] * (1.0 - h[j]);
        for (std::size_t i = 0; i < m.n_in; ++i) g1(j, i) = delta1 * x[i];
        g1(j, m.n_in) = delta1;
    }
    return loss;
}

} // namespace detail

/// Online (per-sample) gradient descent on MSE. Sample order reshuffled
/// each epoch from cfg.seed when cfg.shuffle. Returns the trained net
/// and the mean per-sample loss of each epoch.
inline std::pair<Mlp, std::vector<double>>
mlp_train(Mlp m, const std::vector<std::vector<double>>& inputs,
          const std::vector<std::vector<double>>& targets, const TrainConfig& cfg) {
    if (inputs.empty())
        throw data_error("mlp_train: empty training set");
    if (inputs.size() != targets.size())
        throw shape_error("mlp_train: " + std::to_string(inputs.size()) +
                          " inputs vs " + std::to_string(targets.size()) + " targets");
    if (cfg.learning_rate <= 0.0)
        throw parameter_error("mlp_train: learning_rate must be positive");
    if (cfg.epochs == 0)
        throw parameter_error("mlp_train: epochs must be >= 1");
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].size() != m.n_in)
            throw shape_error("mlp_train: input " + std::to_string(i) + " has length " +
                              std::to_string(inputs[i].size()) + ", expected " +
                              std::to_string(m.n_in));
        if (targets[i].size() != m.n_out)
            throw shape_error("mlp_train: target " + std::to_string(i) + " has length " +
                              std::to_string(targets[i].size()) + ", expected " +
                              std::to_string(m.n_out));
    }

    SplitMix64 rng(cfg.seed);
    Matrix g1(m.n_hidden, m.n_in + 1), g2(m.n_out, m.n_hidden + 1);
    std::vector<double> history(cfg.epochs);
    std::vector<std::size_t> order(inputs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.shuffle) order = shuffled_indices(inputs.size(), rng);
        double epoch_loss = 0.0;
        for (std::size_t s : order) {
            epoch_loss += detail::mlp_gradients(m, inputs[s], targets[s], g1, g2);
            for (std::size_t i = 0; i < m.w1.size(); ++i)
                m.w1.data()[i] -= cfg.learning_rate * g1.data()[i];
            for (std::size_t i = 0; i < m.w2.size(); ++i)
                m.w2.data()[i] -= cfg.learning_rate * g2.data()[i];
        }
        history[epoch] = epoch_loss / static_cast<double>(inputs.size());
    }
    return {std::move(m), std::move(history)};
}

/// Max relative error between analytic gradients and central finite
/// differences over every weight of the net.
inline double mlp_gradient_check(const Mlp& m, const std::vector<double>& x,
                                 const std::vector<double>& t, double eps = 1e-5) {
    if (eps <= 0.0 || eps > 1e-2)
        throw parameter_error("mlp_gradient_check: eps must be in (0, 1e-2]");
    if (x.size() != m.n_in || t.size() != m.n_out)
        throw shape_error("mlp_gradient_check: sample dimensions do not match net");

    Matrix g1(m.n_hidden, m.n_in + 1), g2(m.n_out, m.n_hidden + 1);
    detail::mlp_gradients(m, x, t, g1, g2);

    auto loss_at = [&](const Mlp& net) {
        const std::vector<double> y = mlp_forward(net, x);
        double loss = 0.0;
        for (std::size_t k = 0; k < y.size(); ++k)
            loss += 0.5 * (y[k] - t[k]) * (y[k] - t[k]);
        return loss;
    };

    double max_err = 0.0;
    Mlp probe = m;
    auto check_layer = [&](Matrix& w, const Matrix& g) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double orig = w.data()[i];
            w.data()[i] = orig + eps;
            const double up = loss_at(probe);
            w.data()[i] = orig - eps;
            const double down = loss_at(probe);
            w.data()[i] = orig;
            const double numeric = (up - down) / (2.0 * eps);
            const double analytic = g.data()[i];
            const double denom =
                std::max({std::abs(analytic), std::abs(numeric), 1e-6});
            max_err = std::max(max_err, std::abs(analytic - numeric) / denom);
        }
    };
    check_layer(probe.w1, g1);
    check_layer(probe.w2, g2);
    return max_err;
}

} // namespace mann

#endif
