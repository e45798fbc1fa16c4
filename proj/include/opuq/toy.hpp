#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace opuq {

/// Two-parameter benchmark system on t in [0,1]: closed-form acceleration and
/// velocity, with the scalar quantity of interest q = integral of velocity
/// (the final position). q has a global peak near (1.215, pi) and a lower
/// local peak near (-4.768, pi).
struct ToySystem {
    double alpha = 0.0;  // in [-7, 4]
    double beta = 0.0;   // in [0, 6]
};

constexpr double kToyAlphaMin = -7.0;
constexpr double kToyAlphaMax = 4.0;
constexpr double kToyBetaMin = 0.0;
constexpr double kToyBetaMax = 6.0;

/// Throws std::invalid_argument when theta leaves the parameter box.
void validate(const ToySystem& theta);

double toy_acceleration(const ToySystem& theta, double t);
double toy_velocity(const ToySystem& theta, double t);
/// Velocity at t = 0, which does not depend on the acceleration history:
/// 1 + alpha - cos(beta).
double toy_initial_velocity(const ToySystem& theta);
/// Final position in closed form: (1+a)sin(a)/a - e^{cos b} + 1, the exact
/// integral of the velocity over [0,1] (series-guarded near a = 0).
double toy_qoi(const ToySystem& theta);

struct ToyEval {
    std::vector<double> times;         // uniform grid on [0,1], endpoints included
    std::vector<double> acceleration;  // f at times
    std::vector<double> velocity;      // u at times
    double qoi = 0.0;
};
/// Samples the closed forms on an n_points grid; n_points >= 2, theta in box.
ToyEval toy_eval(const ToySystem& theta, std::size_t n_points);

/// Squashes an acceleration value into (-1/2, 1/2): 1/(1 + e^{-f/2}) - 1/2.
double transform_acceleration(double f);
std::vector<double> transform_acceleration(std::span<const double> f);

/// Trapezoid rule for samples on a uniform grid spanning [0,1]:
/// (v_0 + v_n + 2*sum of interior) / (2n). Needs at least 2 values.
double trapezoid(std::span<const double> values);

struct ToyOptimum {
    ToySystem arg;
    double value = 0.0;
};
/// Global maximum of toy_qoi over the parameter box, located once by a dense
/// 2001x2001 scan plus three local refinement passes, then cached.
const ToyOptimum& toy_optimum();

}  // namespace opuq
