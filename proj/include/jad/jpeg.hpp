#pragma once

#include <array>
#include <span>
#include <vector>

#include "jad/tensor.hpp"

namespace jad {

using QuantTable = std::array<int, 64>;

struct QuantTables {
    QuantTable luma;
    QuantTable chroma;
};

/// Standard (Annex K) base tables, i.e. the q = 50 tables.
const QuantTables& base_quant_tables();

/// IJG quality scaling: scale = 5000/q below 50, else 200 - 2q; each entry
/// becomes clamp(floor((base * scale + 50) / 100), 1, 255).
QuantTables quality_to_tables(int quality);

/// Lossy JPEG pixel round trip of an H x W x C image in [0, 1] (C = 1 or 3).
///
/// Per 8x8 block and channel: scale to [0,255], level shift by -128, orthonormal
/// type-II DCT, quantize with round-half-away-from-zero, dequantize, inverse DCT,
/// +128, clamp to [0,255], rescale. Three-channel images go through BT.601
/// YCbCr at 4:4:4. Partial edge blocks are padded by edge replication. No
/// bitstream is produced.
Tensor jpeg_roundtrip(const Tensor& image, int quality);

/// Straight-through JPEG: the forward value is exactly jpeg_roundtrip, the
/// backward pass treats rounding and clamping as identity and propagates
/// through the color transforms and DCT/IDCT only.
class JpegSte {
public:
    JpegSte(const Tensor& image, int quality);

    const Tensor& value() const { return value_; }

    /// Vector-Jacobian product: maps d(loss)/d(output) to d(loss)/d(input).
    Tensor backward(std::span<const double> grad_output) const;

private:
    Shape shape_;
    Tensor value_;
};

}  // namespace jad
