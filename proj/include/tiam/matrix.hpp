#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace tiam {

/// Row-major dense matrix of doubles. Every parameter and activation in the
/// library lives in one of these; a column is one sample of the batch.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static DenseMatrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    bool same_shape(const DenseMatrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    std::string shape_str() const;

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Marker for a clip side that is not bounded.
struct NoBound {};

/// Per-entry bound matrix where each entry is either a finite value or absent.
class BoundMatrix {
public:
    BoundMatrix() = default;
    BoundMatrix(std::size_t rows, std::size_t cols);  // all entries absent
    BoundMatrix(const DenseMatrix& values);            // all entries present

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return value_.size(); }

    bool has(std::size_t i) const noexcept { return present_[i] != 0; }
    double value(std::size_t i) const noexcept { return value_[i]; }
    void set(std::size_t i, double v) noexcept {
        value_[i] = v;
        present_[i] = 1;
    }
    void clear(std::size_t i) noexcept {
        value_[i] = 0.0;
        present_[i] = 0;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> value_;
    std::vector<std::uint8_t> present_;
};

using Bound = std::variant<NoBound, double, BoundMatrix>;

// Products.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);     // a * b
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);  // a^T * b
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);  // a * b^T
DenseMatrix transpose(const DenseMatrix& m);

// Elementwise arithmetic. All require equal shapes.
DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scale(const DenseMatrix& m, double s);
/// alpha * x + beta * y.
DenseMatrix axpby(double alpha, const DenseMatrix& x, double beta, const DenseMatrix& y);
DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b);

/// Adds the column vector `col` (rows x 1) to every column of `m`.
DenseMatrix add_column(const DenseMatrix& m, const DenseMatrix& col);
/// Sums each row across columns, giving rows x 1.
DenseMatrix row_sums(const DenseMatrix& m);

double frobenius_norm_sq(const DenseMatrix& m);
double frobenius_norm(const DenseMatrix& m);
/// Trace inner product <a, b>.
double dot(const DenseMatrix& a, const DenseMatrix& b);
double sum_abs(const DenseMatrix& m);
double max_abs(const DenseMatrix& m);
bool all_finite(const DenseMatrix& m);

/// Entrywise min(max(m, lo), hi). Absent bound sides leave entries unclipped.
DenseMatrix clip_elementwise(const DenseMatrix& m, const Bound& lo, const Bound& hi);

/// Column-wise softmax with per-column max subtraction.
DenseMatrix softmax_columns(const DenseMatrix& z);

}  // namespace tiam
