#pragma once

#include <cstdint>

#include "jad/autodiff.hpp"
#include "jad/network.hpp"

namespace jad {

/// JPEG amplification detector settings. Layer indices are 1-based over the
/// traced outputs; last_layer = 0 means the final traced entry (the logits, or
/// the probabilities when head = Softmax).
struct DetectorConfig {
    int quality = 75;
    int q_lo = 30;
    int q_hi = 80;
    bool randomize = false;
    std::size_t first_layer = 1;
    std::size_t last_layer = 0;
    Head head = Head::Logits;
    double tau = 1.0;
    std::uint64_t seed = 0;

    /// Throws ParameterError/DimensionError when inconsistent with `net`.
    void validate(const Network& net) const;
    std::size_t resolved_last(const Network& net) const;
    /// Quality used for one scoring call: fixed, or drawn from [q_lo, q_hi]
    /// with the stream seeded by `seed`.
    int draw_quality() const;
};

struct JadScore {
    double score = 0.0;
    double d_first = 0.0;
    double d_last = 0.0;
    int quality = 0;
    bool degenerate = false;  // d_first == 0, score forced to 0
};

/// d_last(x, x_san) / d_first(x, x_san) with x_san = JPEG(x, q).
JadScore jad_score(const Network& net, const Tensor& image, const DetectorConfig& cfg);

/// Tape node for d_last / max(d_first, floor) between x and its straight-through
/// JPEG at quality q. Used by detector-aware attacks and gradient checks.
ad::Var jad_ratio_on_tape(ad::Tape& tape, const Network& net, ad::Var x, const Shape& image_shape, int quality,
                          const DetectorConfig& cfg, double floor = 1e-12);

/// Same graph with the sanitizer replaced by x + residual, where `residual`
/// is a constant. Its exact gradient coincides with the straight-through
/// gradient at the point the residual was taken, which makes finite
/// differences usable as an oracle.
ad::Var jad_ratio_frozen_on_tape(ad::Tape& tape, const Network& net, ad::Var x, std::span<const double> residual,
                                 const DetectorConfig& cfg, double floor = 1e-12);

}  // namespace jad
