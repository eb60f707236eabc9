#pragma once

#include <vector>

#include "jad/network.hpp"

namespace jad {

/// d_i = || z_i(x') - z_i(x) ||_2 for every traced layer. With Head::Softmax the
/// list has n + 1 entries, the last one measured on class probabilities.
std::vector<double> layer_impacts(const Network& net, const Tensor& x, const Tensor& x_prime,
                                  Head head = Head::Logits);

std::vector<double> trace_distances(const ActivationTrace& a, const ActivationTrace& b);

}  // namespace jad
