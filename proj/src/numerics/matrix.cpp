#include "tiam/matrix.hpp"

#include "tiam/errors.hpp"
#include "tiam/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace tiam {
namespace {

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
}

// Expands a Bound into a dense array for the clip kernel. Absent sides become
// infinities here and nowhere else.
std::vector<double> expand_bound(const Bound& bound, const DenseMatrix& m, double absent,
                                 const char* side) {
    std::vector<double> out(m.size(), absent);
    if (const auto* s = std::get_if<double>(&bound)) {
        std::fill(out.begin(), out.end(), *s);
    } else if (const auto* bm = std::get_if<BoundMatrix>(&bound)) {
        if (bm->rows() != m.rows() || bm->cols() != m.cols())
            throw ShapeError(std::string("clip_elementwise: ") + side + " bound shape " +
                             std::to_string(bm->rows()) + "x" + std::to_string(bm->cols()) +
                             " does not match " + m.shape_str());
        for (std::size_t i = 0; i < out.size(); ++i)
            if (bm->has(i)) out[i] = bm->value(i);
    }
    return out;
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols)
        throw ShapeError("DenseMatrix: data length " + std::to_string(data_.size()) +
                         " != " + std::to_string(rows) + "x" + std::to_string(cols));
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw ShapeError("DenseMatrix::from_rows: ragged rows");
        data.insert(data.end(), row.begin(), row.end());
    }
    return DenseMatrix(r, c, std::move(data));
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

std::string DenseMatrix::shape_str() const {
    std::ostringstream os;
    os << rows_ << "x" << cols_;
    return os.str();
}

BoundMatrix::BoundMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), value_(rows * cols, 0.0), present_(rows * cols, 0) {}

BoundMatrix::BoundMatrix(const DenseMatrix& values)
    : rows_(values.rows()),
      cols_(values.cols()),
      value_(values.values().begin(), values.values().end()),
      present_(values.size(), 1) {}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: shape mismatch " + a.shape_str() + " * " + b.shape_str());
    DenseMatrix c(a.rows(), b.cols());
    kernels::active().gemm_nn(a.rows(), b.cols(), a.cols(), a.data(), b.data(), c.data());
    return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows())
        throw ShapeError("matmul_tn: shape mismatch " + a.shape_str() + "^T * " +
                         b.shape_str());
    DenseMatrix c(a.cols(), b.cols());
    kernels::active().gemm_tn(a.cols(), b.cols(), a.rows(), a.data(), b.data(), c.data());
    return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.cols())
        throw ShapeError("matmul_nt: shape mismatch " + a.shape_str() + " * " +
                         b.shape_str() + "^T");
    DenseMatrix c(a.rows(), b.rows());
    kernels::active().gemm_nt(a.rows(), b.rows(), a.cols(), a.data(), b.data(), c.data());
    return c;
}

DenseMatrix transpose(const DenseMatrix& m) {
    DenseMatrix t(m.cols(), m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
    return t;
}

DenseMatrix axpby(double alpha, const DenseMatrix& x, double beta, const DenseMatrix& y) {
    require_same_shape(x, y, "axpby");
    DenseMatrix out(x.rows(), x.cols());
    kernels::active().axpby(x.size(), alpha, x.data(), beta, y.data(), out.data());
    return out;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) { return axpby(1.0, a, 1.0, b); }
DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b) { return axpby(1.0, a, -1.0, b); }

DenseMatrix scale(const DenseMatrix& m, double s) {
    DenseMatrix out = m;
    for (double& v : out.values()) v *= s;
    return out;
}

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "hadamard");
    DenseMatrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

DenseMatrix add_column(const DenseMatrix& m, const DenseMatrix& col) {
    if (col.rows() != m.rows() || col.cols() != 1)
        throw ShapeError("add_column: expected " + std::to_string(m.rows()) + "x1, got " +
                         col.shape_str());
    DenseMatrix out = m;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double v = col[r];
        for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) += v;
    }
    return out;
}

DenseMatrix row_sums(const DenseMatrix& m) {
    DenseMatrix out(m.rows(), 1);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c) s += m(r, c);
        out[r] = s;
    }
    return out;
}

double frobenius_norm_sq(const DenseMatrix& m) {
    return kernels::active().sum_sq(m.data(), m.size());
}

double frobenius_norm(const DenseMatrix& m) { return std::sqrt(frobenius_norm_sq(m)); }

double dot(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "dot");
    return kernels::active().dot(a.data(), b.data(), a.size());
}

double sum_abs(const DenseMatrix& m) {
    double s = 0.0;
    for (double v : m.values()) s += std::abs(v);
    return s;
}

double max_abs(const DenseMatrix& m) {
    double s = 0.0;
    for (double v : m.values()) s = std::max(s, std::abs(v));
    return s;
}

bool all_finite(const DenseMatrix& m) {
    return std::all_of(m.values().begin(), m.values().end(),
                       [](double v) { return std::isfinite(v); });
}

DenseMatrix clip_elementwise(const DenseMatrix& m, const Bound& lo, const Bound& hi) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const std::vector<double> lower = expand_bound(lo, m, -inf, "lower");
    const std::vector<double> upper = expand_bound(hi, m, inf, "upper");
    for (std::size_t i = 0; i < lower.size(); ++i)
        if (lower[i] > upper[i])
            throw InfeasibleBoundsError("clip_elementwise: lo > hi at entry " +
                                            std::to_string(i) + " (" +
                                            std::to_string(lower[i]) + " > " +
                                            std::to_string(upper[i]) + ")",
                                        i);
    DenseMatrix out(m.rows(), m.cols());
    kernels::active().clip(m.size(), m.data(), lower.data(), upper.data(), out.data());
    return out;
}

DenseMatrix softmax_columns(const DenseMatrix& z) {
    DenseMatrix out(z.rows(), z.cols());
    for (std::size_t c = 0; c < z.cols(); ++c) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < z.rows(); ++r) mx = std::max(mx, z(r, c));
        double denom = 0.0;
        for (std::size_t r = 0; r < z.rows(); ++r) {
            const double e = std::exp(z(r, c) - mx);
            out(r, c) = e;
            denom += e;
        }
        for (std::size_t r = 0; r < z.rows(); ++r) out(r, c) /= denom;
    }
    return out;
}

}  // namespace tiam
