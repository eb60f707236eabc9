#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "jad/autodiff.hpp"
#include "jad/tensor.hpp"

namespace jad {

enum class Activation : std::uint8_t { Identity = 0, LeakyReLU = 1 };

struct LayerSpec {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    Activation activation = Activation::Identity;
    double alpha = 1.0;  // slope for negative inputs; only read for LeakyReLU

    /// Minimum slope of the activation: alpha for LeakyReLU, 1 for Identity.
    double lipschitz_lower() const { return activation == Activation::LeakyReLU ? alpha : 1.0; }
};

/// One fully connected layer z = f(W z_prev + b), W stored row-major out x in.
struct Layer {
    LayerSpec spec;
    std::vector<double> weight;
    std::vector<double> bias;

    std::span<const double> row(std::size_t r) const { return {weight.data() + r * spec.in_dim, spec.in_dim}; }
};

/// Which representation is appended after the last layer when tracing.
/// Softmax adds the class-probability vector as an extra traced entry so
/// detectors can measure the final impact on probabilities instead of logits.
enum class Head : std::uint8_t { Logits, Softmax };

class Network {
public:
    Network() = default;
    explicit Network(std::vector<Layer> layers);

    std::size_t depth() const { return layers_.size(); }
    std::size_t input_dim() const { return layers_.front().spec.in_dim; }
    std::size_t output_dim() const { return layers_.back().spec.out_dim; }

    const Layer& layer(std::size_t i) const { return layers_.at(i); }
    Layer& layer(std::size_t i) { return layers_.at(i); }
    const std::vector<Layer>& layers() const { return layers_; }

    std::size_t parameter_count() const;

    friend bool operator==(const Network& a, const Network& b);

private:
    void validate() const;
    std::vector<Layer> layers_;
};

/// Layer widths `dims` (input first), LeakyReLU(alpha) on hidden layers and an
/// Identity head. Weights and biases are U(-1/sqrt(in), 1/sqrt(in)).
Network init_mlp(std::span<const std::size_t> dims, double alpha, std::uint64_t seed);

/// Post-activation outputs z_1..z_n (z_0 = input excluded), optionally
/// followed by softmax(z_n).
struct ActivationTrace {
    std::vector<Tensor> z;
};

struct ForwardResult {
    Tensor logits;
    ActivationTrace trace;
};

Tensor leaky_relu(const Tensor& u, double alpha);

ForwardResult forward_with_trace(const Network& net, const Tensor& x, Head head = Head::Logits);
Tensor forward(const Network& net, const Tensor& x);
std::size_t predict(const Network& net, const Tensor& x);

/// Tape-side forward pass. When `weights` is given it must hold one tape
/// variable per layer for W and b (in that order), and parameter gradients
/// become available after backward(); otherwise weights are constants.
struct TapeForward {
    std::vector<ad::Var> z;  // same layout as ActivationTrace::z
    ad::Var logits;
};
struct TapeParams {
    std::vector<ad::Var> weight;
    std::vector<ad::Var> bias;
};
TapeForward forward_on_tape(ad::Tape& tape, const Network& net, ad::Var x, Head head = Head::Logits,
                            const TapeParams* params = nullptr);
TapeParams params_on_tape(ad::Tape& tape, const Network& net);

struct LayerGradient {
    std::vector<double> weight;
    std::vector<double> bias;
};

struct GradientBundle {
    Tensor d_input;
    std::vector<LayerGradient> d_params;
};

/// Builds a scalar loss from the network's tape forward of input variable x.
using LossBuilder = std::function<ad::Var(ad::Tape&, const Network&, ad::Var x)>;

LossBuilder cross_entropy_loss(std::size_t label);
LossBuilder squared_error_loss(std::vector<double> target);

/// Exact reverse-mode gradient of loss(x) with respect to x.
Tensor input_gradient(const Network& net, const Tensor& x, const LossBuilder& loss, double* loss_value = nullptr);

struct Sample {
    const Tensor* x;
    std::size_t label;
};

/// Batch-mean loss and its gradient with respect to every W_i, b_i. The input
/// gradient in the bundle is left empty for batches.
GradientBundle param_gradients(const Network& net, std::span<const Sample> batch, double* mean_loss = nullptr);

}  // namespace jad
