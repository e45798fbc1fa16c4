#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "opuq/dataset.hpp"
#include "opuq/model.hpp"

namespace opuq {

struct Moments {
    double bias = 0.0;
    double skew = 0.0;
    double excess_kurtosis = 0.0;  // Fisher convention: normal -> 0
    bool degenerate = false;       // set when the sample variance is zero
};

/// Sample mean plus standardized third/fourth central moments. Requires at
/// least 8 samples.
Moments error_moments(std::span<const double> errors);

struct Coverage {
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
};

/// Fraction of |error| <= k * sigma for k = 1, 2, 3, pointwise pairs.
Coverage coverage(std::span<const double> errors, std::span<const double> sigmas);

struct Parity {
    double r2 = 0.0;            // against the identity line
    double rel_err_mean = 0.0;  // mean |pred - true| / true
    bool degenerate = false;    // constant true sigmas; r2 is NaN
};

Parity sigma_parity(std::span<const double> true_sigmas, std::span<const double> pred_sigmas);

struct RecordCalibration {
    std::size_t record = 0;
    double length_scale = 0.0;
    Moments moments;            // of the pointwise prediction errors
    double true_sigma = 0.0;    // std of the pointwise errors
    double pred_sigma_mean = 0.0;
};

struct CalibrationStudy {
    std::vector<RecordCalibration> records;
    Coverage pooled;  // over all pointwise (error, sigma) pairs
    Parity parity;    // per-record true vs predicted sigma
    double mean_bias = 0.0;
};

/// Evaluates the model on the given records and assembles per-record error
/// statistics plus pooled coverage and sigma parity. Every record needs at
/// least 8 eval points and the study needs at least 2 records.
CalibrationStudy calibrate_model(const OperatorModel& model, const Dataset& ds,
                                 const std::vector<std::size_t>& records, double f_rescale = 1.0);

/// calibration.csv: one row per record with moments and sigmas.
void write_calibration(const CalibrationStudy& study, const std::string& path);
/// coverage.csv: single row with columns c1,c2,c3.
void write_coverage(const Coverage& cov, const std::string& path);

}  // namespace opuq
