#include "jad/spectral.hpp"

#include <cmath>
#include <string>

#include "jad/error.hpp"
#include "jad/impact.hpp"

namespace jad {

std::vector<double> log_sigma_min_gradient(const SvdResult& svd, std::size_t rows, std::size_t cols) {
    const std::size_t k = svd.singular_values.size() - 1;
    const double s = svd.singular_values[k];
    std::vector<double> g(rows * cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] = svd.left(r, k) * svd.right(c, k) / s;
    return g;
}

SpectralPenalty spectral_penalty(const Network& net, double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("spectral_penalty: lambda must be >= 0");
    SpectralPenalty out;
    out.weight_grads.resize(net.depth());
    out.sigma_min.resize(net.depth());
    for (std::size_t i = 0; i < net.depth(); ++i) {
        const auto& l = net.layer(i);
        const auto svd = svd_small(l.weight, l.spec.out_dim, l.spec.in_dim);
        out.sigma_min[i] = svd.sigma_min();
        if (i == 0) {
            out.weight_grads[i].assign(l.weight.size(), 0.0);
            continue;
        }
        if (svd.sigma_min() <= 1e-12 * svd.sigma_max() || svd.sigma_min() == 0.0) {
            throw SingularWeightError("sigma_min(W_" + std::to_string(i + 1) + ") is zero; log penalty undefined", i + 1);
        }
        if (!svd.min_is_simple()) out.degenerate_min = true;
        out.value -= lambda * std::log(svd.sigma_min());
        if (lambda == 0.0) {
            out.weight_grads[i].assign(l.weight.size(), 0.0);
            continue;
        }
        auto g = log_sigma_min_gradient(svd, l.spec.out_dim, l.spec.in_dim);
        for (auto& v : g) v *= -lambda;
        out.weight_grads[i] = std::move(g);
    }
    if (lambda == 0.0) out.value = 0.0;
    return out;
}

SpectralReport certify_beta(const Network& net) {
    SpectralReport rep;
    rep.no_interior_layers = net.depth() < 2;
    double cum = 1.0;
    for (std::size_t i = 0; i < net.depth(); ++i) {
        const auto& l = net.layer(i);
        const auto svd = svd_small(l.weight, l.spec.out_dim, l.spec.in_dim);
        LayerSpectrum s;
        s.layer = i + 1;
        s.thin_sigma_min = svd.sigma_min();
        s.sigma_min = l.spec.in_dim > l.spec.out_dim ? 0.0 : s.thin_sigma_min;
        s.sigma_max = svd.sigma_max();
        s.lipschitz_lower = l.spec.lipschitz_lower();
        if (!(s.lipschitz_lower > 0.0)) rep.activations_expand = false;
        if (i > 0) cum *= s.lipschitz_lower * s.sigma_min;
        s.cumulative_beta = cum;
        rep.per_layer.push_back(s);
    }
    rep.beta = cum;
    rep.amplifying = rep.beta > 1.0;
    return rep;
}

BoundCheck verify_bound(const Network& net, const Tensor& x, const Tensor& x_prime, double rel_slack) {
    if (x.size() != x_prime.size()) throw DimensionError("verify_bound: inputs differ in size");
    const auto rep = certify_beta(net);
    BoundCheck out;
    out.d = layer_impacts(net, x, x_prime);
    out.beta = rep.beta;
    const std::size_t n = out.d.size();
    out.lower.assign(n, 0.0);
    out.layer_holds.assign(n, true);
    if (out.d[0] == 0.0) {
        out.degenerate = true;
        return out;
    }
    for (std::size_t i = 1; i < n; ++i) {
        const auto& s = rep.per_layer[i];
        out.lower[i] = s.lipschitz_lower * s.sigma_min * out.d[i - 1];
        out.layer_holds[i] = out.d[i] >= (1.0 - rel_slack) * out.lower[i];
        out.holds = out.holds && out.layer_holds[i];
    }
    out.chained_holds = out.d[n - 1] >= (1.0 - rel_slack) * out.beta * out.d[0];
    out.holds = out.holds && out.chained_holds;
    return out;
}

}  // namespace jad
