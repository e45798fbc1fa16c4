#include "opuq/acquire.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace opuq {

long long round_half_even(double v) {
    const double fl = std::floor(v);
    const double frac = v - fl;
    const long long base = static_cast<long long>(fl);
    if (frac > 0.5) return base + 1;
    if (frac < 0.5) return base;
    return base % 2 == 0 ? base : base + 1;
}

double AcquisitionSchedule::explore(std::size_t iter) const {
    return explore0 * std::pow(decay, static_cast<double>(iter));
}

double AcquisitionSchedule::spacing(std::size_t iter) const {
    return spacing0 * std::pow(decay, static_cast<double>(iter));
}

std::size_t AcquisitionSchedule::random_count(std::size_t iter) const {
    const long long n = round_half_even(random0 * std::pow(decay, static_cast<double>(iter)));
    return n > 0 ? static_cast<std::size_t>(n) : 0;
}

std::vector<std::size_t> acquire_batch(const DenseMatrix& candidates,
                                       std::span<const double> score,
                                       std::span<const double> sigma, double explore,
                                       double spacing, std::size_t k) {
    const std::size_t n = candidates.rows();
    if (n == 0) throw std::invalid_argument("acquire: empty candidate set");
    if (score.size() != n || sigma.size() != n)
        throw std::invalid_argument("acquire: score/sigma length does not match candidates");
    if (k > n) throw std::invalid_argument("acquire: batch larger than candidate set");
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(score[i])) throw std::invalid_argument("acquire: non-finite score");
        if (!(sigma[i] >= 0.0)) throw std::invalid_argument("acquire: negative sigma");
    }

    std::vector<double> acq(n);
    for (std::size_t i = 0; i < n; ++i) acq[i] = score[i] + explore * sigma[i];

    const std::size_t dim = candidates.cols();
    std::vector<std::size_t> picks;
    picks.reserve(k);
    std::vector<char> taken(n, 0);
    double gap = spacing;

    const auto far_enough = [&](std::size_t i) {
        if (gap <= 0.0) return true;
        const double* xi = candidates.row(i);
        for (std::size_t p : picks) {
            const double* xp = candidates.row(p);
            double d2 = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                const double t = xi[d] - xp[d];
                d2 += t * t;
            }
            if (!(std::sqrt(d2) > gap)) return false;
        }
        return true;
    };

    while (picks.size() < k) {
        std::size_t best = n;
        double best_v = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i)
            if (!taken[i] && acq[i] > best_v && far_enough(i)) {
                best_v = acq[i];
                best = i;
            }
        if (best == n) {
            gap = gap < 1e-12 ? 0.0 : gap * 0.5;
            continue;
        }
        picks.push_back(best);
        taken[best] = 1;
    }
    return picks;
}

}  // namespace opuq
