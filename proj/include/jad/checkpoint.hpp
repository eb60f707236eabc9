#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "jad/network.hpp"

namespace jad {

// Binary layout, all little-endian:
//   "JADN" 0x01 | u32 layer count | per layer:
//   u32 out_dim, u32 in_dim, u8 activation (0 Identity, 1 LeakyReLU), f64 alpha,
//   f64 W[out_dim * in_dim] row-major, f64 b[out_dim]
std::vector<std::uint8_t> encode_checkpoint(const Network& net);
Network decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Network& net, const std::filesystem::path& path);
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace jad
