#include "opuq/dense.hpp"

#include <stdexcept>
#include <utility>

#ifdef OPUQ_WITH_BLAS
#include <cblas.h>
#endif

namespace opuq {

DenseMatrix DenseMatrix::from_rows(std::size_t rows, std::size_t cols, std::vector<double> data) {
    if (data.size() != rows * cols) throw std::invalid_argument("from_rows: size mismatch");
    DenseMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.data_ = std::move(data);
    return m;
}

void DenseMatrix::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

void DenseMatrix::resize(std::size_t rows, std::size_t cols) {
    rows_ = rows;
    cols_ = cols;
    data_.assign(rows * cols, 0.0);
}

namespace {

struct OpShape {
    std::size_t rows, cols;
};

OpShape op_shape(Trans t, const DenseMatrix& m) {
    return t == Trans::No ? OpShape{m.rows(), m.cols()} : OpShape{m.cols(), m.rows()};
}

}  // namespace

void gemm(Trans ta, Trans tb, double alpha, const DenseMatrix& a, const DenseMatrix& b,
          double beta, DenseMatrix& c) {
    const auto sa = op_shape(ta, a);
    const auto sb = op_shape(tb, b);
    if (sa.cols != sb.rows) throw std::invalid_argument("gemm: inner dimension mismatch");
    if (c.rows() != sa.rows || c.cols() != sb.cols) throw std::invalid_argument("gemm: output shape mismatch");
#ifdef OPUQ_WITH_BLAS
    cblas_dgemm(CblasRowMajor, ta == Trans::No ? CblasNoTrans : CblasTrans,
                tb == Trans::No ? CblasNoTrans : CblasTrans, static_cast<int>(sa.rows),
                static_cast<int>(sb.cols), static_cast<int>(sa.cols), alpha, a.data(),
                static_cast<int>(a.cols()), b.data(), static_cast<int>(b.cols()), beta, c.data(),
                static_cast<int>(c.cols()));
#else
    gemm_naive(ta, tb, alpha, a, b, beta, c);
#endif
}

void gemv(Trans ta, double alpha, const DenseMatrix& a, std::span<const double> x, double beta,
          std::span<double> y) {
    const auto sa = op_shape(ta, a);
    if (x.size() != sa.cols || y.size() != sa.rows) throw std::invalid_argument("gemv: shape mismatch");
#ifdef OPUQ_WITH_BLAS
    cblas_dgemv(CblasRowMajor, ta == Trans::No ? CblasNoTrans : CblasTrans,
                static_cast<int>(a.rows()), static_cast<int>(a.cols()), alpha, a.data(),
                static_cast<int>(a.cols()), x.data(), 1, beta, y.data(), 1);
#else
    for (std::size_t i = 0; i < sa.rows; ++i) {
        double acc = 0.0;
        if (ta == Trans::No) {
            const double* ar = a.row(i);
            for (std::size_t k = 0; k < sa.cols; ++k) acc += ar[k] * x[k];
        } else {
            for (std::size_t k = 0; k < sa.cols; ++k) acc += a(k, i) * x[k];
        }
        y[i] = alpha * acc + beta * y[i];
    }
#endif
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
#ifdef OPUQ_WITH_BLAS
    return cblas_ddot(static_cast<int>(a.size()), a.data(), 1, b.data(), 1);
#else
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
#endif
}

void gemm_naive(Trans ta, Trans tb, double alpha, const DenseMatrix& a, const DenseMatrix& b,
                double beta, DenseMatrix& c) {
    const auto sa = op_shape(ta, a);
    const auto sb = op_shape(tb, b);
    if (sa.cols != sb.rows) throw std::invalid_argument("gemm_naive: inner dimension mismatch");
    if (c.rows() != sa.rows || c.cols() != sb.cols) throw std::invalid_argument("gemm_naive: output shape mismatch");
    auto at = [&](std::size_t i, std::size_t k) { return ta == Trans::No ? a(i, k) : a(k, i); };
    auto bt = [&](std::size_t k, std::size_t j) { return tb == Trans::No ? b(k, j) : b(j, k); };
    for (std::size_t i = 0; i < sa.rows; ++i) {
        for (std::size_t j = 0; j < sb.cols; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < sa.cols; ++k) acc += at(i, k) * bt(k, j);
            c(i, j) = alpha * acc + beta * c(i, j);
        }
    }
}

}  // namespace opuq
