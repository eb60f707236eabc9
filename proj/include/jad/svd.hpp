#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace jad {

/// Row-major dense matrix. Thin wrapper used by the spectral code; layers keep
/// their weights as plain vectors and are viewed through MatrixView.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> d);

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    static Matrix identity(std::size_t n);
};

/// Thin SVD W = U diag(s) V^T with k = min(rows, cols).
/// `left` is rows x k and `right` is cols x k; column j holds the j-th vector.
struct SvdResult {
    std::vector<double> singular_values;  // descending, non-negative
    Matrix left;
    Matrix right;
    int sweeps = 0;

    double sigma_max() const { return singular_values.front(); }
    double sigma_min() const { return singular_values.back(); }

    /// True when the smallest singular value is separated from the next one
    /// by more than `gap` (always true for k = 1).
    bool min_is_simple(double gap = 1e-6) const;

    std::vector<double> left_vector(std::size_t j) const;
    std::vector<double> right_vector(std::size_t j) const;
};

/// One-sided (Hestenes) Jacobi SVD with a fixed cyclic pair order. Rotations
/// stop once every column pair has |cos| < 1e-12. Deterministic given W; each
/// right vector is sign-normalized so its first non-negligible entry is
/// positive, and the matching left vector is flipped with it.
SvdResult svd_small(std::span<const double> w, std::size_t rows, std::size_t cols);
SvdResult svd_small(const Matrix& w);

}  // namespace jad
