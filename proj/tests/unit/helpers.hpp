#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "jad/network.hpp"
#include "jad/rng.hpp"
#include "jad/tensor.hpp"

namespace testutil {

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

/// max_i |a_i - b_i| / max(1, ||b||_inf)
inline double max_rel_err(std::span<const double> a, std::span<const double> b) {
    double scale = 1.0;
    for (double v : b) scale = std::max(scale, std::abs(v));
    double e = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
    return e / scale;
}

/// Central differences of f at x, step h.
inline std::vector<double> central_diff(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> x, double h = 1e-6) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double x0 = x[i];
        x[i] = x0 + h;
        const double fp = f(x);
        x[i] = x0 - h;
        const double fm = f(x);
        x[i] = x0;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

inline std::vector<double> random_vector(std::size_t n, jad::SplitMix64& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

inline jad::Layer make_layer(std::size_t out, std::size_t in, std::vector<double> w, std::vector<double> b,
                             jad::Activation act, double alpha) {
    return jad::Layer{{in, out, act, act == jad::Activation::LeakyReLU ? alpha : 1.0}, std::move(w), std::move(b)};
}

/// Random network with LeakyReLU(alpha) everywhere except an Identity head.
inline jad::Network random_net(std::span<const std::size_t> dims, double alpha, jad::SplitMix64& rng,
                               double scale = 1.0) {
    std::vector<jad::Layer> layers;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        const bool last = i + 2 == dims.size();
        layers.push_back(make_layer(dims[i + 1], dims[i], random_vector(dims[i] * dims[i + 1], rng, -scale, scale),
                                    random_vector(dims[i + 1], rng, -0.5, 0.5),
                                    last ? jad::Activation::Identity : jad::Activation::LeakyReLU, alpha));
    }
    return jad::Network(std::move(layers));
}

/// Plain forward pass used as an oracle: no tape, no shared code with the library.
inline std::vector<std::vector<double>> oracle_trace(const jad::Network& net, std::vector<double> x) {
    std::vector<std::vector<double>> z;
    for (const auto& l : net.layers()) {
        std::vector<double> u(l.spec.out_dim);
        for (std::size_t r = 0; r < l.spec.out_dim; ++r) {
            double s = l.bias[r];
            for (std::size_t c = 0; c < l.spec.in_dim; ++c) s += l.weight[r * l.spec.in_dim + c] * x[c];
            u[r] = (l.spec.activation == jad::Activation::LeakyReLU && s < 0.0) ? l.spec.alpha * s : s;
        }
        z.push_back(u);
        x = std::move(u);
    }
    return z;
}

inline std::vector<double> oracle_softmax(const std::vector<double>& z) {
    const double m = *std::max_element(z.begin(), z.end());
    std::vector<double> p(z.size());
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) s += p[i] = std::exp(z[i] - m);
    for (auto& v : p) v /= s;
    return p;
}

inline double oracle_ce(const jad::Network& net, const std::vector<double>& x, std::size_t label) {
    const auto z = oracle_trace(net, x).back();
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    return m + std::log(s) - z[label];
}

inline double dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace testutil
