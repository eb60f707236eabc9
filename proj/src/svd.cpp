#include "jad/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "jad/error.hpp"

namespace jad {

namespace {

constexpr double kOrthTol = 1e-12;
constexpr int kMaxSweeps = 80;

// Columns of a rows x cols matrix stored column-major for the rotations.
struct ColumnStore {
    std::size_t rows, cols;
    std::vector<double> v;
    double* col(std::size_t j) { return v.data() + j * rows; }
    const double* col(std::size_t j) const { return v.data() + j * rows; }
};

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

// Hestenes Jacobi on a tall matrix (rows >= cols): orthogonalizes the columns of
// A in place while accumulating the rotations into V.
int orthogonalize(ColumnStore& a, ColumnStore& v) {
    const std::size_t n = a.cols;
    for (int sweep = 1; sweep <= kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double* ap = a.col(p);
                double* aq = a.col(q);
                const double alpha = dot(ap, ap, a.rows);
                const double beta = dot(aq, aq, a.rows);
                const double gamma = dot(ap, aq, a.rows);
                if (alpha == 0.0 || beta == 0.0) continue;
                if (std::abs(gamma) <= kOrthTol * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < a.rows; ++i) {
                    const double x = ap[i];
                    const double y = aq[i];
                    ap[i] = c * x - s * y;
                    aq[i] = s * x + c * y;
                }
                double* vp = v.col(p);
                double* vq = v.col(q);
                for (std::size_t i = 0; i < v.rows; ++i) {
                    const double x = vp[i];
                    const double y = vq[i];
                    vp[i] = c * x - s * y;
                    vq[i] = s * x + c * y;
                }
            }
        }
        if (!rotated) return sweep;
    }
    throw NumericError("svd_small: Jacobi sweeps did not converge");
}

// Replaces zero columns of an orthonormal-column matrix with unit vectors
// orthogonal to the rest (Gram-Schmidt against the standard basis).
void complete_basis(Matrix& m, std::vector<bool> filled) {
    std::size_t next_e = 0;
    for (std::size_t j = 0; j < m.cols; ++j) {
        if (filled[j]) continue;
        for (; next_e < m.rows; ++next_e) {
            std::vector<double> cand(m.rows, 0.0);
            cand[next_e] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t k = 0; k < m.cols; ++k) {
                    if (!filled[k]) continue;
                    double d = 0.0;
                    for (std::size_t i = 0; i < m.rows; ++i) d += cand[i] * m(i, k);
                    for (std::size_t i = 0; i < m.rows; ++i) cand[i] -= d * m(i, k);
                }
            }
            double n = 0.0;
            for (double x : cand) n += x * x;
            n = std::sqrt(n);
            if (n > 1e-6) {
                for (std::size_t i = 0; i < m.rows; ++i) m(i, j) = cand[i] / n;
                filled[j] = true;
                ++next_e;
                break;
            }
        }
    }
}

SvdResult svd_tall(std::span<const double> w, std::size_t rows, std::size_t cols) {
    ColumnStore a{rows, cols, std::vector<double>(rows * cols)};
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) a.v[c * rows + r] = w[r * cols + c];
    ColumnStore v{cols, cols, std::vector<double>(cols * cols, 0.0)};
    for (std::size_t j = 0; j < cols; ++j) v.v[j * cols + j] = 1.0;

    SvdResult out;
    out.sweeps = orthogonalize(a, v);

    std::vector<double> norms(cols);
    for (std::size_t j = 0; j < cols; ++j) norms[j] = std::sqrt(dot(a.col(j), a.col(j), rows));
    std::vector<std::size_t> order(cols);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return norms[i] > norms[j]; });

    out.singular_values.resize(cols);
    out.left = Matrix(rows, cols);
    out.right = Matrix(cols, cols);
    std::vector<bool> filled(cols, false);
    const double smax = norms[order[0]];
    for (std::size_t k = 0; k < cols; ++k) {
        const std::size_t j = order[k];
        const double s = norms[j];
        out.singular_values[k] = s;
        for (std::size_t i = 0; i < cols; ++i) out.right(i, k) = v.col(j)[i];
        if (s > 0.0 && s >= 1e-15 * smax) {
            for (std::size_t i = 0; i < rows; ++i) out.left(i, k) = a.col(j)[i] / s;
            filled[k] = true;
        }
    }
    complete_basis(out.left, filled);
    return out;
}

void normalize_signs(SvdResult& r) {
    const std::size_t k = r.singular_values.size();
    for (std::size_t j = 0; j < k; ++j) {
        double lead = 0.0;
        for (std::size_t i = 0; i < r.right.rows; ++i) {
            if (std::abs(r.right(i, j)) > 1e-12) {
                lead = r.right(i, j);
                break;
            }
        }
        if (lead < 0.0) {
            for (std::size_t i = 0; i < r.right.rows; ++i) r.right(i, j) = -r.right(i, j);
            for (std::size_t i = 0; i < r.left.rows; ++i) r.left(i, j) = -r.left(i, j);
        }
    }
}

}  // namespace

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != r * c) throw DimensionError("matrix data size mismatch");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool SvdResult::min_is_simple(double gap) const {
    const auto k = singular_values.size();
    if (k < 2) return true;
    return singular_values[k - 2] - singular_values[k - 1] > gap;
}

std::vector<double> SvdResult::left_vector(std::size_t j) const {
    std::vector<double> u(left.rows);
    for (std::size_t i = 0; i < left.rows; ++i) u[i] = left(i, j);
    return u;
}

std::vector<double> SvdResult::right_vector(std::size_t j) const {
    std::vector<double> v(right.rows);
    for (std::size_t i = 0; i < right.rows; ++i) v[i] = right(i, j);
    return v;
}

SvdResult svd_small(std::span<const double> w, std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0 || w.size() != rows * cols) throw DimensionError("svd_small: bad matrix shape");
    for (double x : w) {
        if (!std::isfinite(x)) throw NumericError("svd_small: non-finite matrix entry");
    }
    SvdResult out;
    if (rows >= cols) {
        out = svd_tall(w, rows, cols);
    } else {
        std::vector<double> wt(w.size());
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) wt[c * rows + r] = w[r * cols + c];
        SvdResult t = svd_tall(wt, cols, rows);
        out.singular_values = std::move(t.singular_values);
        out.left = std::move(t.right);
        out.right = std::move(t.left);
        out.sweeps = t.sweeps;
    }
    normalize_signs(out);
    return out;
}

SvdResult svd_small(const Matrix& w) { return svd_small(w.data, w.rows, w.cols); }

}  // namespace jad
