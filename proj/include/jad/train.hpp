#pragma once

#include <cstdint>
#include <vector>

#include "jad/dataset.hpp"
#include "jad/network.hpp"

namespace jad {

enum class TrainMode { Default, Amplified };
enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
    TrainMode mode = TrainMode::Default;
    double lambda = 0.0;  // spectral weight; forced to 0 in default mode
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    double lr = 1e-2;
    OptimizerKind optimizer = OptimizerKind::Adam;
    std::uint64_t seed = 0;

    /// Applies the mode rules against `net` and returns the effective config.
    TrainConfig validated(const Network& net) const;
};

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    double loss = 0.0;      // mean of cross-entropy + spectral penalty over batches
    double accuracy = 0.0;  // training accuracy after the epoch
    double min_sigma_min = 0.0;  // min over layers 2..n of sigma_min(W_i)
};

struct TrainResult {
    Network net;
    std::vector<EpochStats> history;
};

/// Adam with the usual beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
class Adam {
public:
    explicit Adam(const Network& net, double lr);
    void step(Network& net, const std::vector<LayerGradient>& grads);

private:
    double lr_;
    long t_ = 0;
    std::vector<LayerGradient> m_, v_;
};

/// Minimizes cross-entropy plus the spectral penalty (zero in default mode)
/// with seeded per-epoch shuffling. Throws SingularWeightError carrying the
/// epoch if a regularized layer becomes singular.
TrainResult train(Network net, const Dataset& data, const TrainConfig& cfg);

double accuracy(const Network& net, const Dataset& data);

/// min over layers 2..n of sigma_min(W_i); +inf for single-layer networks.
double min_interior_sigma(const Network& net);

}  // namespace jad
