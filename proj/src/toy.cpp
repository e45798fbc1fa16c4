#include "opuq/toy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace opuq {

void validate(const ToySystem& theta) {
    if (!(theta.alpha >= kToyAlphaMin && theta.alpha <= kToyAlphaMax))
        throw std::invalid_argument("toy: alpha outside [-7, 4]");
    if (!(theta.beta >= kToyBetaMin && theta.beta <= kToyBetaMax))
        throw std::invalid_argument("toy: beta outside [0, 6]");
}

double toy_acceleration(const ToySystem& theta, double t) {
    const double c = std::cos(theta.beta);
    return -(1.0 + theta.alpha) * theta.alpha * std::sin(theta.alpha * t) -
           c * c * std::exp(t * c);
}

double toy_velocity(const ToySystem& theta, double t) {
    const double c = std::cos(theta.beta);
    return (1.0 + theta.alpha) * std::cos(theta.alpha * t) - c * std::exp(t * c);
}

double toy_initial_velocity(const ToySystem& theta) {
    return 1.0 + theta.alpha - std::cos(theta.beta);
}

double toy_qoi(const ToySystem& theta) {
    const double a = theta.alpha;
    const double c = std::cos(theta.beta);
    const double sinc = std::abs(a) < 1e-12 ? 1.0 - a * a / 6.0 : std::sin(a) / a;
    return (1.0 + a) * sinc - std::exp(c) + 1.0;
}

ToyEval toy_eval(const ToySystem& theta, std::size_t n_points) {
    validate(theta);
    if (n_points < 2) throw std::invalid_argument("toy: need at least 2 time points");
    ToyEval out;
    out.times.resize(n_points);
    out.acceleration.resize(n_points);
    out.velocity.resize(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n_points - 1);
        out.times[i] = t;
        out.acceleration[i] = toy_acceleration(theta, t);
        out.velocity[i] = toy_velocity(theta, t);
    }
    out.qoi = toy_qoi(theta);
    return out;
}

double transform_acceleration(double f) {
    return 1.0 / (1.0 + std::exp(-0.5 * f)) - 0.5;
}

std::vector<double> transform_acceleration(std::span<const double> f) {
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = transform_acceleration(f[i]);
    return out;
}

double trapezoid(std::span<const double> values) {
    if (values.size() < 2) throw std::invalid_argument("trapezoid: need at least 2 samples");
    const std::size_t n = values.size() - 1;  // interval count
    double interior = 0.0;
    for (std::size_t i = 1; i < n; ++i) interior += values[i];
    return (values[0] + values[n] + 2.0 * interior) / (2.0 * static_cast<double>(n));
}

const ToyOptimum& toy_optimum() {
    static const ToyOptimum cached = [] {
        const auto scan = [](double alo, double ahi, double blo, double bhi, std::size_t na,
                             std::size_t nb) {
            ToyOptimum best{{alo, blo}, -std::numeric_limits<double>::infinity()};
            for (std::size_t i = 0; i < na; ++i) {
                const double a =
                    alo + (ahi - alo) * static_cast<double>(i) / static_cast<double>(na - 1);
                for (std::size_t j = 0; j < nb; ++j) {
                    const double b =
                        blo + (bhi - blo) * static_cast<double>(j) / static_cast<double>(nb - 1);
                    const double v = toy_qoi({a, b});
                    if (v > best.value) best = {{a, b}, v};
                }
            }
            return best;
        };
        ToyOptimum cur = scan(kToyAlphaMin, kToyAlphaMax, kToyBetaMin, kToyBetaMax, 2001, 2001);
        double ha = (kToyAlphaMax - kToyAlphaMin) / 2000.0;
        double hb = (kToyBetaMax - kToyBetaMin) / 2000.0;
        for (int pass = 0; pass < 3; ++pass) {
            const double alo = std::max(kToyAlphaMin, cur.arg.alpha - ha);
            const double ahi = std::min(kToyAlphaMax, cur.arg.alpha + ha);
            const double blo = std::max(kToyBetaMin, cur.arg.beta - hb);
            const double bhi = std::min(kToyBetaMax, cur.arg.beta + hb);
            cur = scan(alo, ahi, blo, bhi, 201, 201);
            ha = (ahi - alo) / 200.0;
            hb = (bhi - blo) / 200.0;
        }
        return cur;
    }();
    return cached;
}

}  // namespace opuq
