#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "jad/rng.hpp"
#include "jad/tensor.hpp"

namespace jad {

enum class CorruptionKind { UniformLinf, GaussianL2, SaltPepper, GaussianBlur, Jpeg, Laplacian };

std::string_view corruption_name(CorruptionKind k);
CorruptionKind parse_corruption(std::string_view name);

/// `magnitude` is the kind's single parameter: eps for uniform_linf, the exact
/// l2 norm rho for gaussian_l2, the flip probability p for salt_pepper, the
/// kernel std for gaussian_blur, the Laplace scale b for laplacian, and the
/// quality for jpeg.
struct CorruptionSpec {
    CorruptionKind kind = CorruptionKind::UniformLinf;
    double magnitude = 0.0;
    std::uint64_t seed = 0;
};

/// Applies a non-adversarial corruption and clamps to [0, 1]. Deterministic in
/// (x, spec).
Tensor corrupt(const Tensor& x, const CorruptionSpec& spec);

/// Gaussian direction rescaled to have l2 norm exactly rho (0 gives zeros).
std::vector<double> gaussian_l2_noise(std::size_t n, double rho, SplitMix64& rng);

/// Separable Gaussian blur with edge replication; sigma <= 0 is the identity.
Tensor gaussian_blur(const Tensor& image, double sigma);

}  // namespace jad
