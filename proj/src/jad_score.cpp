#include "jad/jad_score.hpp"

#include <string>

#include "jad/error.hpp"
#include "jad/impact.hpp"
#include "jad/jpeg.hpp"
#include "jad/rng.hpp"

namespace jad {

namespace {

std::size_t traced_count(const Network& net, Head head) { return net.depth() + (head == Head::Softmax ? 1 : 0); }

ad::Var ratio_between(ad::Tape& tape, const Network& net, ad::Var x, ad::Var x_san, const DetectorConfig& cfg,
                      double floor) {
    const auto a = forward_on_tape(tape, net, x, cfg.head);
    const auto b = forward_on_tape(tape, net, x_san, cfg.head);
    const std::size_t first = cfg.first_layer - 1;
    const std::size_t last = cfg.resolved_last(net) - 1;
    const ad::Var d_first = ad::l2_norm(tape, ad::sub(tape, a.z[first], b.z[first]));
    const ad::Var d_last = ad::l2_norm(tape, ad::sub(tape, a.z[last], b.z[last]));
    return ad::divide(tape, d_last, ad::max_scalar(tape, d_first, floor));
}

}  // namespace

void DetectorConfig::validate(const Network& net) const {
    if (quality < 1 || quality > 100) throw ParameterError("detector quality must be in [1, 100]");
    if (q_lo < 1 || q_lo > q_hi || q_hi > 100) throw ParameterError("detector quality range must satisfy 1 <= lo <= hi <= 100");
    const std::size_t last = resolved_last(net);
    if (first_layer < 1 || first_layer >= last || last > traced_count(net, head)) {
        throw DimensionError("detector layers must satisfy 1 <= first < last <= " +
                             std::to_string(traced_count(net, head)));
    }
}

std::size_t DetectorConfig::resolved_last(const Network& net) const {
    return last_layer == 0 ? traced_count(net, head) : last_layer;
}

int DetectorConfig::draw_quality() const {
    if (!randomize) return quality;
    SplitMix64 rng(seed);
    return rng.uniform_int(q_lo, q_hi);
}

JadScore jad_score(const Network& net, const Tensor& image, const DetectorConfig& cfg) {
    cfg.validate(net);
    JadScore s;
    s.quality = cfg.draw_quality();
    const Tensor san = jpeg_roundtrip(image, s.quality);
    const auto d = layer_impacts(net, image, san, cfg.head);
    s.d_first = d[cfg.first_layer - 1];
    s.d_last = d[cfg.resolved_last(net) - 1];
    if (s.d_first > 0.0) {
        s.score = s.d_last / s.d_first;
    } else {
        s.degenerate = true;
    }
    return s;
}

ad::Var jad_ratio_on_tape(ad::Tape& tape, const Network& net, ad::Var x, const Shape& image_shape, int quality,
                          const DetectorConfig& cfg, double floor) {
    cfg.validate(net);
    const Tensor image(image_shape, tape.value(x));
    JpegSte ste(image, quality);
    const ad::Var x_san = ad::custom_unary(tape, x, ste.value().data(),
                                           [ste](std::span<const double> g_out, std::span<double> g_in) {
                                               const Tensor g = ste.backward(g_out);
                                               for (std::size_t i = 0; i < g_in.size(); ++i) g_in[i] += g[i];
                                           });
    return ratio_between(tape, net, x, x_san, cfg, floor);
}

ad::Var jad_ratio_frozen_on_tape(ad::Tape& tape, const Network& net, ad::Var x, std::span<const double> residual,
                                 const DetectorConfig& cfg, double floor) {
    cfg.validate(net);
    const ad::Var x_san = ad::add(tape, x, tape.leaf(residual));
    return ratio_between(tape, net, x, x_san, cfg, floor);
}

}  // namespace jad
