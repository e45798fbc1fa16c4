#include "opuq/field.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#ifdef OPUQ_WITH_BLAS
#include <cblas.h>
extern "C" void dpotrf_(const char* uplo, const int* n, double* a, const int* lda, int* info);
#endif

namespace opuq {

double kernel_eval(const SqExpKernel& k, std::span<const double> x, std::span<const double> y) {
    if (k.length_scale <= 0.0) throw std::invalid_argument("kernel: length scale must be positive");
    if (x.size() != y.size()) throw std::invalid_argument("kernel: dimension mismatch");
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        d2 += d * d;
    }
    return std::exp(-d2 / (2.0 * k.length_scale * k.length_scale));
}

bool cholesky_lower(DenseMatrix& a) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw std::invalid_argument("cholesky: matrix must be square");
#ifdef OPUQ_WITH_BLAS
    // Column-major upper triangle occupies the same bytes as the row-major
    // lower triangle of the (symmetric) input.
    const int ni = static_cast<int>(n);
    int info = 0;
    dpotrf_("U", &ni, a.data(), &ni, &info);
    if (info != 0) return false;
    // dpotrf passes NaN input through silently; reject such factors here
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c <= r; ++c)
            if (!std::isfinite(a(r, c))) return false;
#else
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j) - dot({a.row(j), j}, {a.row(j), j});
        if (d <= 0.0 || !std::isfinite(d)) return false;
        d = std::sqrt(d);
        a(j, j) = d;
        for (std::size_t i = j + 1; i < n; ++i)
            a(i, j) = (a(i, j) - dot({a.row(i), j}, {a.row(j), j})) / d;
    }
#endif
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = r + 1; c < n; ++c) a(r, c) = 0.0;
    return true;
}

FieldSampler::FieldSampler(std::vector<std::vector<double>> points, SqExpKernel kernel,
                           std::uint64_t seed)
    : points_(std::move(points)), kernel_(kernel), rng_(seed) {
    if (points_.empty()) throw std::invalid_argument("sampler: empty point set");
    if (kernel_.length_scale <= 0.0) throw std::invalid_argument("sampler: length scale must be positive");
    const std::size_t n = points_.size();
    DenseMatrix cov(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        cov(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = kernel_eval(kernel_, points_[i], points_[j]);
            cov(i, j) = v;
            cov(j, i) = v;
        }
    }
    constexpr double kJitterStart = 1e-12;
    constexpr double kJitterCap = 1e-6;
    for (double jitter = kJitterStart;; jitter *= 10.0) {
        chol_ = cov;
        for (std::size_t i = 0; i < n; ++i) chol_(i, i) += jitter;
        if (cholesky_lower(chol_)) {
            jitter_ = jitter;
            return;
        }
        if (jitter >= kJitterCap) break;
    }
    double min_diag = cov(0, 0), max_diag = cov(0, 0);
    for (std::size_t i = 1; i < n; ++i) {
        min_diag = std::min(min_diag, cov(i, i));
        max_diag = std::max(max_diag, cov(i, i));
    }
    std::ostringstream msg;
    msg << "sampler: covariance not positive definite at jitter cap " << kJitterCap
        << " (n = " << n << ", est. condition >= " << max_diag / kJitterCap << ")";
    throw std::runtime_error(msg.str());
}

std::vector<double> FieldSampler::sample() { return sample_with(rng_); }

std::vector<double> FieldSampler::sample_with(Rng& rng) const {
    const std::size_t n = points_.size();
    std::vector<double> z(n);
    for (auto& v : z) v = rng.normal();
#ifdef OPUQ_WITH_BLAS
    cblas_dtrmv(CblasRowMajor, CblasLower, CblasNoTrans, CblasNonUnit, static_cast<int>(n),
                chol_.data(), static_cast<int>(n), z.data(), 1);
    return z;
#else
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = dot({chol_.row(i), i + 1}, {z.data(), i + 1});
    return out;
#endif
}

}  // namespace opuq
