#pragma once

#include <cstdint>
#include <vector>

#include "opuq/dense.hpp"
#include "opuq/rng.hpp"

namespace opuq {

struct SqExpKernel {
    double length_scale;
};

double kernel_eval(const SqExpKernel& k, std::span<const double> x, std::span<const double> y);

/// Mean-zero Gaussian field sampler over a fixed point set: dense covariance,
/// Cholesky factor with adaptive jitter, samples are chol * z.
class FieldSampler {
public:
    FieldSampler(std::vector<std::vector<double>> points, SqExpKernel kernel, std::uint64_t seed);

    /// One field realization, advancing the sampler's own stream.
    std::vector<double> sample();
    /// One field realization drawn from an external stream (for per-worker
    /// substreams during parallel generation).
    std::vector<double> sample_with(Rng& rng) const;

    const DenseMatrix& chol() const { return chol_; }
    double jitter() const { return jitter_; }
    const SqExpKernel& kernel() const { return kernel_; }
    std::size_t point_count() const { return points_.size(); }
    const std::vector<std::vector<double>>& points() const { return points_; }

private:
    std::vector<std::vector<double>> points_;
    SqExpKernel kernel_;
    DenseMatrix chol_;
    double jitter_ = 0.0;
    Rng rng_;
};

/// In-place lower Cholesky of a symmetric positive-definite matrix; returns
/// false (leaving the buffer unspecified) when a pivot fails.
bool cholesky_lower(DenseMatrix& a);

}  // namespace opuq
