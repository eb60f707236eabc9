#include "jad/network.hpp"

#include <cmath>
#include <string>

#include "jad/error.hpp"
#include "jad/rng.hpp"

namespace jad {

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) { validate(); }

void Network::validate() const {
    if (layers_.empty()) throw DimensionError("network needs at least one layer");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        const auto idx = std::to_string(i + 1);
        if (l.spec.in_dim == 0 || l.spec.out_dim == 0) throw DimensionError("layer " + idx + " has a zero dimension");
        if (l.weight.size() != l.spec.in_dim * l.spec.out_dim) {
            throw DimensionError("layer " + idx + " weight size does not match out_dim x in_dim");
        }
        if (l.bias.size() != l.spec.out_dim) throw DimensionError("layer " + idx + " bias size does not match out_dim");
        if (i > 0 && l.spec.in_dim != layers_[i - 1].spec.out_dim) {
            throw DimensionError("layer " + idx + " in_dim does not chain with layer " + std::to_string(i));
        }
        if (l.spec.activation == Activation::LeakyReLU && !(l.spec.alpha > 0.0)) {
            throw ParameterError("layer " + idx + " LeakyReLU alpha must be > 0");
        }
    }
}

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
}

bool operator==(const Network& a, const Network& b) {
    if (a.layers_.size() != b.layers_.size()) return false;
    for (std::size_t i = 0; i < a.layers_.size(); ++i) {
        const auto& x = a.layers_[i];
        const auto& y = b.layers_[i];
        if (x.spec.in_dim != y.spec.in_dim || x.spec.out_dim != y.spec.out_dim ||
            x.spec.activation != y.spec.activation || x.spec.alpha != y.spec.alpha || x.weight != y.weight ||
            x.bias != y.bias) {
            return false;
        }
    }
    return true;
}

Network init_mlp(std::span<const std::size_t> dims, double alpha, std::uint64_t seed) {
    if (dims.size() < 2) throw DimensionError("init_mlp needs at least input and output widths");
    SplitMix64 rng(seed);
    std::vector<Layer> layers;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        Layer l;
        l.spec.in_dim = dims[i];
        l.spec.out_dim = dims[i + 1];
        const bool last = i + 2 == dims.size();
        l.spec.activation = last ? Activation::Identity : Activation::LeakyReLU;
        l.spec.alpha = last ? 1.0 : alpha;
        const double bound = 1.0 / std::sqrt(static_cast<double>(dims[i]));
        l.weight.resize(dims[i] * dims[i + 1]);
        for (auto& w : l.weight) w = rng.uniform(-bound, bound);
        l.bias.resize(dims[i + 1]);
        for (auto& b : l.bias) b = rng.uniform(-bound, bound);
        layers.push_back(std::move(l));
    }
    return Network(std::move(layers));
}

Tensor leaky_relu(const Tensor& u, double alpha) {
    if (!(alpha > 0.0)) throw ParameterError("leaky_relu alpha must be > 0");
    Tensor out = u;
    for (auto& v : out.values()) v = v >= 0.0 ? v : alpha * v;
    return out;
}

namespace {

void softmax_inplace(std::vector<double>& v) {
    double m = v[0];
    for (double e : v) m = e > m ? e : m;
    double s = 0.0;
    for (auto& e : v) s += (e = std::exp(e - m));
    for (auto& e : v) e /= s;
}

void check_input(const Network& net, const Tensor& x) {
    if (x.size() != net.input_dim()) {
        throw DimensionError("input has " + std::to_string(x.size()) + " values, network expects " +
                             std::to_string(net.input_dim()));
    }
}

}  // namespace

ForwardResult forward_with_trace(const Network& net, const Tensor& x, Head head) {
    check_input(net, x);
    ForwardResult out;
    std::vector<double> prev(x.values().begin(), x.values().end());
    for (const auto& l : net.layers()) {
        std::vector<double> z(l.spec.out_dim);
        for (std::size_t r = 0; r < l.spec.out_dim; ++r) {
            const double* row = l.weight.data() + r * l.spec.in_dim;
            double s = 0.0;
            for (std::size_t c = 0; c < l.spec.in_dim; ++c) s += row[c] * prev[c];
            s += l.bias[r];
            z[r] = (l.spec.activation == Activation::LeakyReLU && s < 0.0) ? l.spec.alpha * s : s;
        }
        out.trace.z.push_back(Tensor::vector(z));
        prev = std::move(z);
    }
    out.logits = out.trace.z.back();
    if (head == Head::Softmax) {
        softmax_inplace(prev);
        out.trace.z.push_back(Tensor::vector(std::move(prev)));
    }
    return out;
}

Tensor forward(const Network& net, const Tensor& x) { return forward_with_trace(net, x).logits; }

std::size_t predict(const Network& net, const Tensor& x) { return argmax(forward(net, x).values()); }

TapeParams params_on_tape(ad::Tape& tape, const Network& net) {
    TapeParams p;
    for (const auto& l : net.layers()) {
        p.weight.push_back(tape.leaf(std::span<const double>(l.weight)));
        p.bias.push_back(tape.leaf(std::span<const double>(l.bias)));
    }
    return p;
}

TapeForward forward_on_tape(ad::Tape& tape, const Network& net, ad::Var x, Head head, const TapeParams* params) {
    if (tape.value(x).size() != net.input_dim()) throw DimensionError("forward_on_tape: input size mismatch");
    TapeForward out;
    ad::Var h = x;
    for (std::size_t i = 0; i < net.depth(); ++i) {
        const auto& l = net.layer(i);
        ad::Var pre;
        if (params) {
            pre = ad::add(tape, ad::matvec(tape, params->weight[i], h, l.spec.out_dim, l.spec.in_dim),
                          params->bias[i]);
        } else {
            pre = ad::add(tape, ad::matvec(tape, std::span<const double>(l.weight), h, l.spec.out_dim, l.spec.in_dim),
                          tape.leaf(std::span<const double>(l.bias)));
        }
        h = l.spec.activation == Activation::LeakyReLU ? ad::leaky_relu(tape, pre, l.spec.alpha) : pre;
        out.z.push_back(h);
    }
    out.logits = h;
    if (head == Head::Softmax) out.z.push_back(ad::softmax(tape, h));
    return out;
}

LossBuilder cross_entropy_loss(std::size_t label) {
    return [label](ad::Tape& t, const Network& net, ad::Var x) {
        return ad::cross_entropy(t, forward_on_tape(t, net, x).logits, label);
    };
}

LossBuilder squared_error_loss(std::vector<double> target) {
    return [target = std::move(target)](ad::Tape& t, const Network& net, ad::Var x) {
        return ad::squared_error(t, forward_on_tape(t, net, x).logits, target);
    };
}

Tensor input_gradient(const Network& net, const Tensor& x, const LossBuilder& loss, double* loss_value) {
    check_input(net, x);
    ad::Tape tape;
    const ad::Var xv = tape.leaf(x.values());
    const ad::Var l = loss(tape, net, xv);
    if (loss_value) *loss_value = tape.scalar(l);
    tape.backward(l);
    const auto g = tape.grad(xv);
    return Tensor(x.shape(), std::vector<double>(g.begin(), g.end()));
}

GradientBundle param_gradients(const Network& net, std::span<const Sample> batch, double* mean_loss) {
    if (batch.empty()) throw DimensionError("param_gradients: empty batch");
    ad::Tape tape;
    const TapeParams params = params_on_tape(tape, net);
    ad::Var total;
    for (const auto& s : batch) {
        check_input(net, *s.x);
        const ad::Var x = tape.leaf(s.x->values());
        const ad::Var ce = ad::cross_entropy(tape, forward_on_tape(tape, net, x, Head::Logits, &params).logits, s.label);
        total = total.valid() ? ad::add(tape, total, ce) : ce;
    }
    const ad::Var mean = ad::scale(tape, total, 1.0 / static_cast<double>(batch.size()));
    if (mean_loss) *mean_loss = tape.scalar(mean);
    tape.backward(mean);

    GradientBundle out;
    for (std::size_t i = 0; i < net.depth(); ++i) {
        const auto gw = tape.grad(params.weight[i]);
        const auto gb = tape.grad(params.bias[i]);
        out.d_params.push_back({{gw.begin(), gw.end()}, {gb.begin(), gb.end()}});
    }
    return out;
}

}  // namespace jad
