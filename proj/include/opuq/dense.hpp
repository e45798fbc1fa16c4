#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace opuq {

/// Row-major dense matrix of doubles. Vectors are 1-column or 1-row matrices.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static DenseMatrix from_rows(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }
    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }

    void set_zero();
    void resize(std::size_t rows, std::size_t cols);

    bool same_shape(const DenseMatrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

enum class Trans { No, Yes };

/// C = alpha * op(A) * op(B) + beta * C.  Shapes are checked; C must be
/// pre-sized to the product shape.
void gemm(Trans ta, Trans tb, double alpha, const DenseMatrix& a, const DenseMatrix& b,
          double beta, DenseMatrix& c);

/// y = alpha * op(A) * x + beta * y with x, y contiguous vectors.
void gemv(Trans ta, double alpha, const DenseMatrix& a, std::span<const double> x, double beta,
          std::span<double> y);

double dot(std::span<const double> a, std::span<const double> b);

/// Reference triple-loop product, kept as an oracle for the BLAS-backed path.
void gemm_naive(Trans ta, Trans tb, double alpha, const DenseMatrix& a, const DenseMatrix& b,
                double beta, DenseMatrix& c);

}  // namespace opuq
