#pragma once

#include <cstddef>
#include <vector>

#include "jad/network.hpp"
#include "jad/svd.hpp"

namespace jad {

struct SpectralPenalty {
    double value = 0.0;
    /// d(value)/dW_i for every layer; layer 1 is unregularized and gets zeros.
    std::vector<std::vector<double>> weight_grads;
    /// sigma_min(W_i) per layer (index 0 included for reporting).
    std::vector<double> sigma_min;
    /// Set when some regularized layer has a repeated smallest singular value,
    /// in which case the gradient direction is not unique.
    bool degenerate_min = false;
};

/// -lambda * sum_{i=2..n} log sigma_min(W_i) and its gradient
/// -lambda * u_min v_min^T / sigma_min for each regularized layer.
/// Throws SingularWeightError if a regularized layer is numerically singular.
SpectralPenalty spectral_penalty(const Network& net, double lambda);

/// d log sigma_min(W) / dW = u_min v_min^T / sigma_min (row-major, rows x cols).
std::vector<double> log_sigma_min_gradient(const SvdResult& svd, std::size_t rows, std::size_t cols);

/// sigma_min here is the smallest singular value over the whole input space,
/// i.e. min ||W v|| / ||v||. For a wide layer (in_dim > out_dim) W has a null
/// space and this is 0, even though the thin SVD's smallest value is not;
/// the thin value is kept in thin_sigma_min.
struct LayerSpectrum {
    std::size_t layer = 0;  // 1-based
    double sigma_min = 0.0;
    double thin_sigma_min = 0.0;
    double sigma_max = 0.0;
    double lipschitz_lower = 0.0;  // L_f
    double cumulative_beta = 1.0;  // prod_{j=2..layer} L_f_j sigma_min(W_j)
};

struct SpectralReport {
    std::vector<LayerSpectrum> per_layer;
    double beta = 1.0;
    bool activations_expand = true;  // every L_f > 0
    bool amplifying = false;         // beta > 1
    bool no_interior_layers = false; // n == 1, beta is the empty product
};

SpectralReport certify_beta(const Network& net);

struct BoundCheck {
    std::vector<double> d;           // impacts d_1..d_n
    std::vector<double> lower;       // L_f_i sigma_min(W_i) d_{i-1}, entry 0 unused (0)
    std::vector<bool> layer_holds;   // per-layer recursive bound, entry 0 always true
    double beta = 1.0;
    bool chained_holds = true;       // d_n >= beta d_1
    bool holds = true;               // every layer bound and the chained bound
    bool degenerate = false;         // d_1 == 0 (non-trivial attack condition fails)
};

/// Measures d_i between two inputs and checks d_i >= L_f_i sigma_min(W_i) d_{i-1}
/// for every layer and d_n >= beta d_1, each with relative slack `rel_slack`.
BoundCheck verify_bound(const Network& net, const Tensor& x, const Tensor& x_prime, double rel_slack = 1e-9);

}  // namespace jad
