#include "jad/jpeg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "jad/error.hpp"

namespace jad {

namespace {

constexpr std::size_t kBlock = 8;

// clang-format off
constexpr QuantTable kBaseLuma = {
    16, 11, 10, 16,  24,  40,  51,  61,
    12, 12, 14, 19,  26,  58,  60,  55,
    14, 13, 16, 24,  40,  57,  69,  56,
    14, 17, 22, 29,  51,  87,  80,  62,
    18, 22, 37, 56,  68, 109, 103,  77,
    24, 35, 55, 64,  81, 104, 113,  92,
    49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103,  99};

constexpr QuantTable kBaseChroma = {
    17, 18, 24, 47, 99, 99, 99, 99,
    18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99,
    47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99};

// BT.601 full-range (JFIF) RGB -> YCbCr and its standard inverse.
constexpr double kToYcc[3][3] = {
    { 0.299,     0.587,     0.114   },
    {-0.168736, -0.331264,  0.5     },
    { 0.5,      -0.418688, -0.081312}};
constexpr double kToRgb[3][3] = {
    {1.0,  0.0,       1.402   },
    {1.0, -0.344136, -0.714136},
    {1.0,  1.772,     0.0     }};
// clang-format on

// Orthonormal DCT-II basis, C[k][n].
struct DctBasis {
    double c[kBlock][kBlock];
    DctBasis() {
        for (std::size_t k = 0; k < kBlock; ++k) {
            const double a = k == 0 ? std::sqrt(1.0 / kBlock) : std::sqrt(2.0 / kBlock);
            for (std::size_t n = 0; n < kBlock; ++n) {
                c[k][n] = a * std::cos(std::numbers::pi * (2.0 * n + 1.0) * k / (2.0 * kBlock));
            }
        }
    }
};

const DctBasis& dct() {
    static const DctBasis basis;
    return basis;
}

using Block = std::array<double, kBlock * kBlock>;

// out = C in C^T
Block dct2(const Block& in) {
    const auto& C = dct().c;
    Block tmp{}, out{};
    for (std::size_t k = 0; k < kBlock; ++k)
        for (std::size_t j = 0; j < kBlock; ++j) {
            double s = 0.0;
            for (std::size_t n = 0; n < kBlock; ++n) s += C[k][n] * in[n * kBlock + j];
            tmp[k * kBlock + j] = s;
        }
    for (std::size_t k = 0; k < kBlock; ++k)
        for (std::size_t l = 0; l < kBlock; ++l) {
            double s = 0.0;
            for (std::size_t j = 0; j < kBlock; ++j) s += tmp[k * kBlock + j] * C[l][j];
            out[k * kBlock + l] = s;
        }
    return out;
}

// out = C^T in C
Block idct2(const Block& in) {
    const auto& C = dct().c;
    Block tmp{}, out{};
    for (std::size_t n = 0; n < kBlock; ++n)
        for (std::size_t l = 0; l < kBlock; ++l) {
            double s = 0.0;
            for (std::size_t k = 0; k < kBlock; ++k) s += C[k][n] * in[k * kBlock + l];
            tmp[n * kBlock + l] = s;
        }
    for (std::size_t n = 0; n < kBlock; ++n)
        for (std::size_t m = 0; m < kBlock; ++m) {
            double s = 0.0;
            for (std::size_t l = 0; l < kBlock; ++l) s += tmp[n * kBlock + l] * C[l][m];
            out[n * kBlock + m] = s;
        }
    return out;
}

int scale_entry(int base, int scale) {
    const long v = (static_cast<long>(base) * scale + 50) / 100;
    return static_cast<int>(std::clamp<long>(v, 1, 255));
}

void check_quality(int q) {
    if (q < 1 || q > 100) throw ParameterError("JPEG quality must be in [1, 100], got " + std::to_string(q));
}

void check_image(const Tensor& image) {
    if (image.rank() != 3) throw DimensionError("JPEG expects an HxWxC image, got " + shape_string(image.shape()));
    const auto c = image.channels();
    if (c != 1 && c != 3) throw DimensionError("JPEG supports 1 or 3 channels");
}

// Planar working copy of the image in the codec domain: one plane per
// channel, values on the 0..255 scale, level shifted, padded to whole blocks.
struct Planes {
    std::size_t h, w, hp, wp, c;
    std::vector<std::vector<double>> p;

    double& at(std::size_t ch, std::size_t y, std::size_t x) { return p[ch][y * wp + x]; }
    double at(std::size_t ch, std::size_t y, std::size_t x) const { return p[ch][y * wp + x]; }
};

Planes make_planes(std::size_t h, std::size_t w, std::size_t c) {
    Planes pl{h, w, (h + kBlock - 1) / kBlock * kBlock, (w + kBlock - 1) / kBlock * kBlock, c, {}};
    pl.p.assign(c, std::vector<double>(pl.hp * pl.wp, 0.0));
    return pl;
}

// Forward linear front end: [0,1] pixels -> level-shifted YCbCr planes with
// edge-replicated padding.
Planes to_planes(const Tensor& image) {
    const std::size_t h = image.height(), w = image.width(), c = image.channels();
    Planes pl = make_planes(h, w, c);
    for (std::size_t y = 0; y < pl.hp; ++y) {
        const std::size_t sy = std::min(y, h - 1);
        for (std::size_t x = 0; x < pl.wp; ++x) {
            const std::size_t sx = std::min(x, w - 1);
            const double* px = image.data().data() + (sy * w + sx) * c;
            if (c == 1) {
                pl.at(0, y, x) = px[0] * 255.0 - 128.0;
            } else {
                double rgb[3] = {px[0] * 255.0, px[1] * 255.0, px[2] * 255.0};
                for (std::size_t k = 0; k < 3; ++k) {
                    double v = kToYcc[k][0] * rgb[0] + kToYcc[k][1] * rgb[1] + kToYcc[k][2] * rgb[2];
                    if (k > 0) v += 128.0;
                    pl.at(k, y, x) = v - 128.0;
                }
            }
        }
    }
    return pl;
}

template <class F>
void for_each_block(Planes& pl, F&& f) {
    for (std::size_t ch = 0; ch < pl.c; ++ch)
        for (std::size_t by = 0; by < pl.hp; by += kBlock)
            for (std::size_t bx = 0; bx < pl.wp; bx += kBlock) {
                Block b;
                for (std::size_t i = 0; i < kBlock; ++i)
                    for (std::size_t j = 0; j < kBlock; ++j) b[i * kBlock + j] = pl.at(ch, by + i, bx + j);
                b = f(ch, b);
                for (std::size_t i = 0; i < kBlock; ++i)
                    for (std::size_t j = 0; j < kBlock; ++j) pl.at(ch, by + i, bx + j) = b[i * kBlock + j];
            }
}

}  // namespace

const QuantTables& base_quant_tables() {
    static const QuantTables t{kBaseLuma, kBaseChroma};
    return t;
}

QuantTables quality_to_tables(int quality) {
    check_quality(quality);
    const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    QuantTables t;
    for (std::size_t i = 0; i < 64; ++i) {
        t.luma[i] = scale_entry(kBaseLuma[i], scale);
        t.chroma[i] = scale_entry(kBaseChroma[i], scale);
    }
    return t;
}

Tensor jpeg_roundtrip(const Tensor& image, int quality) {
    check_quality(quality);
    check_image(image);
    const auto tables = quality_to_tables(quality);
    Planes pl = to_planes(image);

    for_each_block(pl, [&](std::size_t ch, const Block& b) {
        const auto& q = ch == 0 ? tables.luma : tables.chroma;
        Block f = dct2(b);
        for (std::size_t i = 0; i < 64; ++i) f[i] = std::round(f[i] / q[i]) * q[i];
        return idct2(f);
    });

    const std::size_t h = pl.h, w = pl.w, c = pl.c;
    Tensor out(image.shape());
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            double* px = out.data().data() + (y * w + x) * c;
            if (c == 1) {
                px[0] = std::clamp(pl.at(0, y, x) + 128.0, 0.0, 255.0) / 255.0;
            } else {
                const double Y = pl.at(0, y, x) + 128.0;
                const double cb = pl.at(1, y, x);  // already centred on 0
                const double cr = pl.at(2, y, x);
                const double ycc[3] = {Y, cb, cr};
                for (std::size_t k = 0; k < 3; ++k) {
                    const double v = kToRgb[k][0] * ycc[0] + kToRgb[k][1] * ycc[1] + kToRgb[k][2] * ycc[2];
                    px[k] = std::clamp(v, 0.0, 255.0) / 255.0;
                }
            }
        }
    return out;
}

JpegSte::JpegSte(const Tensor& image, int quality) : shape_(image.shape()), value_(jpeg_roundtrip(image, quality)) {}

Tensor JpegSte::backward(std::span<const double> grad_output) const {
    if (grad_output.size() != shape_size(shape_)) throw DimensionError("JpegSte::backward: gradient size mismatch");
    const std::size_t h = shape_[0], w = shape_[1], c = shape_[2];
    Planes pl = make_planes(h, w, c);

    // Adjoint of: inverse color, +128 shift, clamp (identity), /255 and crop.
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const double* g = grad_output.data() + (y * w + x) * c;
            if (c == 1) {
                pl.at(0, y, x) = g[0] / 255.0;
            } else {
                for (std::size_t k = 0; k < 3; ++k) {
                    double s = 0.0;
                    for (std::size_t r = 0; r < 3; ++r) s += kToRgb[r][k] * g[r] / 255.0;
                    pl.at(k, y, x) = s;
                }
            }
        }

    // Adjoint of IDCT then DCT per block; quantization is the identity under STE.
    // R = C^T F C has adjoint C g C^T (dct2); F = C P C^T has adjoint C^T g C (idct2).
    for_each_block(pl, [](std::size_t, const Block& g) { return idct2(dct2(g)); });

    // Adjoint of edge padding (scatter-add), color transform and *255.
    Tensor out(shape_);
    auto& od = out.data();
    for (std::size_t y = 0; y < pl.hp; ++y) {
        const std::size_t sy = std::min(y, h - 1);
        for (std::size_t x = 0; x < pl.wp; ++x) {
            const std::size_t sx = std::min(x, w - 1);
            double* px = od.data() + (sy * w + sx) * c;
            if (c == 1) {
                px[0] += pl.at(0, y, x) * 255.0;
            } else {
                for (std::size_t k = 0; k < 3; ++k) {
                    double s = 0.0;
                    for (std::size_t r = 0; r < 3; ++r) s += kToYcc[r][k] * pl.at(r, y, x);
                    px[k] += s * 255.0;
                }
            }
        }
    }
    return out;
}

}  // namespace jad
