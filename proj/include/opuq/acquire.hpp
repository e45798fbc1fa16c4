#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "opuq/dense.hpp"

namespace opuq {

/// Nearest integer with ties to even (bankers' rounding), independent of the
/// ambient FP rounding mode.
long long round_half_even(double v);

/// Per-iteration decay of the acquisition knobs: value0 * decay^iter for the
/// exploration weight and the spacing radius, and a rounded count of extra
/// uniform queries mixed into each batch.
struct AcquisitionSchedule {
    double explore0 = 2.0;
    double spacing0 = 1.0;
    double decay = 0.9;
    double random0 = 5.0;

    double explore(std::size_t iter) const;
    double spacing(std::size_t iter) const;
    std::size_t random_count(std::size_t iter) const;
};

/// Sequential batch selection: repeatedly pick the argmax of
/// score + explore * sigma over candidates lying strictly farther than
/// `spacing` (Euclidean) from every earlier pick of this batch; score ties go
/// to the lower index. spacing <= 0 disables the distance filter, so
/// explore = spacing = 0 returns the exact top-k. If no candidate qualifies,
/// the spacing is halved until one does (dropped entirely below 1e-12).
/// Returns k row indices into candidates, in pick order.
std::vector<std::size_t> acquire_batch(const DenseMatrix& candidates,
                                       std::span<const double> score,
                                       std::span<const double> sigma, double explore,
                                       double spacing, std::size_t k);

}  // namespace opuq
