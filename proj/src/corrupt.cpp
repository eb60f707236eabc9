#include "jad/corrupt.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "jad/error.hpp"
#include "jad/jpeg.hpp"

namespace jad {

std::string_view corruption_name(CorruptionKind k) {
    switch (k) {
        case CorruptionKind::UniformLinf: return "uniform_linf";
        case CorruptionKind::GaussianL2: return "gaussian_l2";
        case CorruptionKind::SaltPepper: return "salt_pepper";
        case CorruptionKind::GaussianBlur: return "gaussian_blur";
        case CorruptionKind::Jpeg: return "jpeg";
        case CorruptionKind::Laplacian: return "laplacian";
    }
    return "?";
}

CorruptionKind parse_corruption(std::string_view name) {
    for (auto k : {CorruptionKind::UniformLinf, CorruptionKind::GaussianL2, CorruptionKind::SaltPepper,
                   CorruptionKind::GaussianBlur, CorruptionKind::Jpeg, CorruptionKind::Laplacian}) {
        if (corruption_name(k) == name) return k;
    }
    throw ParameterError("unknown corruption kind '" + std::string(name) + "'");
}

std::vector<double> gaussian_l2_noise(std::size_t n, double rho, SplitMix64& rng) {
    std::vector<double> d(n, 0.0);
    if (rho == 0.0) return d;
    double norm = 0.0;
    while (norm == 0.0) {
        for (auto& v : d) v = rng.normal();
        norm = l2_norm(d);
    }
    for (auto& v : d) v *= rho / norm;
    return d;
}

Tensor gaussian_blur(const Tensor& image, double sigma) {
    if (sigma <= 0.0) return image;
    const std::size_t h = image.height(), w = image.width(), c = image.channels();
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) total += (k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma)));
    for (auto& v : k) v /= total;

    auto clampi = [](long v, std::size_t n) { return static_cast<std::size_t>(std::clamp<long>(v, 0, long(n) - 1)); };
    const auto& src = image.data();
    std::vector<double> tmp(src.size(), 0.0);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t ch = 0; ch < c; ++ch) {
                double s = 0.0;
                for (int i = -radius; i <= radius; ++i) s += k[i + radius] * src[(y * w + clampi(long(x) + i, w)) * c + ch];
                tmp[(y * w + x) * c + ch] = s;
            }
    Tensor out(image.shape());
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t ch = 0; ch < c; ++ch) {
                double s = 0.0;
                for (int i = -radius; i <= radius; ++i) s += k[i + radius] * tmp[(clampi(long(y) + i, h) * w + x) * c + ch];
                out[(y * w + x) * c + ch] = std::clamp(s, 0.0, 1.0);
            }
    return out;
}

Tensor corrupt(const Tensor& x, const CorruptionSpec& spec) {
    if (!(spec.magnitude >= 0.0) || !std::isfinite(spec.magnitude)) {
        throw ParameterError("corruption magnitude must be finite and >= 0");
    }
    SplitMix64 rng(spec.seed);
    Tensor out = x;
    auto& d = out.data();
    switch (spec.kind) {
        case CorruptionKind::UniformLinf:
            if (spec.magnitude == 0.0) return out;
            for (auto& v : d) v = std::clamp(v + rng.uniform(-spec.magnitude, spec.magnitude), 0.0, 1.0);
            return out;
        case CorruptionKind::GaussianL2: {
            const auto delta = gaussian_l2_noise(d.size(), spec.magnitude, rng);
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::clamp(d[i] + delta[i], 0.0, 1.0);
            return out;
        }
        case CorruptionKind::SaltPepper: {
            if (spec.magnitude > 1.0) throw ParameterError("salt_pepper probability must be in [0, 1]");
            if (spec.magnitude == 0.0) return out;
            const std::size_t c = x.rank() == 3 ? x.channels() : 1;
            for (std::size_t p = 0; p < d.size() / c; ++p) {
                const double r = rng.uniform();
                if (r >= spec.magnitude) continue;
                const double v = r < spec.magnitude / 2.0 ? 0.0 : 1.0;
                for (std::size_t ch = 0; ch < c; ++ch) d[p * c + ch] = v;
            }
            return out;
        }
        case CorruptionKind::GaussianBlur:
            return gaussian_blur(x, spec.magnitude);
        case CorruptionKind::Jpeg:
            return jpeg_roundtrip(x, static_cast<int>(std::lround(spec.magnitude)));
        case CorruptionKind::Laplacian:
            if (spec.magnitude == 0.0) return out;
            for (auto& v : d) {
                const double u = rng.uniform() - 0.5;
                const double e = -spec.magnitude * std::copysign(1.0, u) * std::log1p(-2.0 * std::abs(u));
                v = std::clamp(v + e, 0.0, 1.0);
            }
            return out;
    }
    throw ParameterError("unknown corruption kind");
}

}  // namespace jad
