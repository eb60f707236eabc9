#include "jad/impact.hpp"

#include "jad/error.hpp"

namespace jad {

std::vector<double> trace_distances(const ActivationTrace& a, const ActivationTrace& b) {
    if (a.z.size() != b.z.size()) throw DimensionError("trace_distances: traces differ in length");
    std::vector<double> d(a.z.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = l2_distance(a.z[i].values(), b.z[i].values());
    return d;
}

std::vector<double> layer_impacts(const Network& net, const Tensor& x, const Tensor& x_prime, Head head) {
    if (x.size() != x_prime.size()) throw DimensionError("layer_impacts: inputs differ in size");
    return trace_distances(forward_with_trace(net, x, head).trace, forward_with_trace(net, x_prime, head).trace);
}

}  // namespace jad
