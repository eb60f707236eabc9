#include "jad/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include "jad/error.hpp"
#include "jad/rng.hpp"
#include "jad/spectral.hpp"

namespace jad {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

std::vector<LayerGradient> zeros_like(const Network& net) {
    std::vector<LayerGradient> z;
    for (const auto& l : net.layers()) z.push_back({std::vector<double>(l.weight.size()), std::vector<double>(l.bias.size())});
    return z;
}

void sgd_step(Network& net, const std::vector<LayerGradient>& g, double lr) {
    for (std::size_t i = 0; i < net.depth(); ++i) {
        auto& l = net.layer(i);
        for (std::size_t j = 0; j < l.weight.size(); ++j) l.weight[j] -= lr * g[i].weight[j];
        for (std::size_t j = 0; j < l.bias.size(); ++j) l.bias[j] -= lr * g[i].bias[j];
    }
}

void shuffle(std::vector<std::size_t>& idx, SplitMix64& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
}

}  // namespace

TrainConfig TrainConfig::validated(const Network& net) const {
    TrainConfig c = *this;
    if (c.epochs == 0 || c.batch_size == 0) throw ParameterError("epochs and batch size must be positive");
    if (!(c.lr >= 0.0) || !std::isfinite(c.lr)) throw ParameterError("learning rate must be finite and >= 0");
    if (c.mode == TrainMode::Default) {
        c.lambda = 0.0;
        return c;
    }
    if (!(c.lambda > 0.0) || !std::isfinite(c.lambda)) throw ParameterError("amplified mode needs lambda > 0");
    for (std::size_t i = 0; i + 1 < net.depth(); ++i) {
        if (net.layer(i).spec.activation != Activation::LeakyReLU) {
            throw ParameterError("amplified mode needs LeakyReLU hidden activations (layer " + std::to_string(i + 1) +
                                 " is Identity)");
        }
    }
    return c;
}

Adam::Adam(const Network& net, double lr) : lr_(lr), m_(zeros_like(net)), v_(zeros_like(net)) {}

void Adam::step(Network& net, const std::vector<LayerGradient>& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                      std::vector<double>& v) {
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = kBeta1 * m[j] + (1.0 - kBeta1) * g[j];
            v[j] = kBeta2 * v[j] + (1.0 - kBeta2) * g[j] * g[j];
            p[j] -= lr_ * (m[j] / c1) / (std::sqrt(v[j] / c2) + kAdamEps);
        }
    };
    for (std::size_t i = 0; i < net.depth(); ++i) {
        auto& l = net.layer(i);
        update(l.weight, grads[i].weight, m_[i].weight, v_[i].weight);
        update(l.bias, grads[i].bias, m_[i].bias, v_[i].bias);
    }
}

double accuracy(const Network& net, const Dataset& data) {
    if (data.size() == 0) return 0.0;
    std::size_t ok = 0;
    for (std::size_t i = 0; i < data.size(); ++i) ok += predict(net, data.images[i]) == data.labels[i];
    return static_cast<double>(ok) / static_cast<double>(data.size());
}

double min_interior_sigma(const Network& net) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < net.depth(); ++i) {
        const auto& l = net.layer(i);
        m = std::min(m, svd_small(l.weight, l.spec.out_dim, l.spec.in_dim).sigma_min());
    }
    return m;
}

TrainResult train(Network net, const Dataset& data, const TrainConfig& config) {
    const TrainConfig cfg = config.validated(net);
    data.validate();
    if (data.input_dim() != net.input_dim()) {
        throw DimensionError("network input " + std::to_string(net.input_dim()) + " != image size " +
                             std::to_string(data.input_dim()));
    }
    if (data.num_classes > net.output_dim()) throw DimensionError("network has fewer outputs than classes");

    SplitMix64 rng(cfg.seed);
    std::optional<Adam> adam;
    if (cfg.optimizer == OptimizerKind::Adam) adam.emplace(net, cfg.lr);

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle(order, rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<Sample> batch;
            for (std::size_t k = start; k < end; ++k) batch.push_back({&data.images[order[k]], data.labels[order[k]]});
            double ce = 0.0;
            auto grads = param_gradients(net, batch, &ce).d_params;
            double penalty = 0.0;
            if (cfg.mode == TrainMode::Amplified) {
                try {
                    const auto sp = spectral_penalty(net, cfg.lambda);
                    penalty = sp.value;
                    for (std::size_t i = 0; i < net.depth(); ++i)
                        for (std::size_t j = 0; j < grads[i].weight.size(); ++j) grads[i].weight[j] += sp.weight_grads[i][j];
                } catch (const SingularWeightError& e) {
                    throw SingularWeightError(std::string(e.what()) + " at epoch " + std::to_string(epoch), e.layer(),
                                              static_cast<long>(epoch));
                }
            }
            loss_sum += ce + penalty;
            ++batches;
            if (adam) {
                adam->step(net, grads);
            } else {
                sgd_step(net, grads, cfg.lr);
            }
        }
        result.history.push_back({epoch, loss_sum / static_cast<double>(batches), accuracy(net, data),
                                  min_interior_sigma(net)});
    }
    result.net = std::move(net);
    return result;
}

}  // namespace jad
