#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace dsrf {

/// Dense row-major matrix of doubles. Just enough linear algebra for the
/// models and metrics here; not a general library.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols),
          data_(static_cast<std::size_t>(rows) * cols, fill) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

    double* row(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
    const double* row(int r) const { return data_.data() + static_cast<std::size_t>(r) * cols_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::size_t size() const { return data_.size(); }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool operator==(const Matrix& o) const = default;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

/// Dot product with four independent accumulators. The summation order is
/// fixed (lane-strided, lanes combined pairwise at the end), so results are
/// reproducible while the loop still vectorizes.
inline double dot_accum4(const double* a, const double* b, int n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

/// y[j] += s * x[j]
inline void axpy(double s, const double* x, double* y, int n) {
    for (int j = 0; j < n; ++j) y[j] += s * x[j];
}

} // namespace dsrf
