#include "opuq/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "opuq/csvio.hpp"
#include "opuq/train.hpp"

namespace opuq {

Moments error_moments(std::span<const double> errors) {
    const std::size_t n = errors.size();
    if (n < 8) throw std::invalid_argument("error_moments: need at least 8 samples");
    double mean = 0.0;
    double lo = errors[0], hi = errors[0];
    for (double e : errors) {
        mean += e;
        lo = std::min(lo, e);
        hi = std::max(hi, e);
    }
    mean /= static_cast<double>(n);

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double e : errors) {
        const double d = e - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);

    Moments out;
    out.bias = mean;
    if (m2 == 0.0 || lo == hi) {
        out.degenerate = true;
        return out;
    }
    out.skew = m3 / std::pow(m2, 1.5);
    out.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    return out;
}

Coverage coverage(std::span<const double> errors, std::span<const double> sigmas) {
    if (errors.size() != sigmas.size())
        throw std::invalid_argument("coverage: errors and sigmas differ in length");
    if (errors.empty()) throw std::invalid_argument("coverage: empty sample");
    std::size_t n1 = 0, n2 = 0, n3 = 0;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!(sigmas[i] > 0.0)) throw std::invalid_argument("coverage: sigmas must be positive");
        const double a = std::abs(errors[i]);
        if (a <= sigmas[i]) ++n1;
        if (a <= 2.0 * sigmas[i]) ++n2;
        if (a <= 3.0 * sigmas[i]) ++n3;
    }
    const double n = static_cast<double>(errors.size());
    return {static_cast<double>(n1) / n, static_cast<double>(n2) / n,
            static_cast<double>(n3) / n};
}

Parity sigma_parity(std::span<const double> true_sigmas, std::span<const double> pred_sigmas) {
    if (true_sigmas.size() != pred_sigmas.size())
        throw std::invalid_argument("sigma_parity: length mismatch");
    const std::size_t n = true_sigmas.size();
    if (n < 2) throw std::invalid_argument("sigma_parity: need at least 2 records");

    double mean_true = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(true_sigmas[i] > 0.0) || !(pred_sigmas[i] > 0.0))
            throw std::invalid_argument("sigma_parity: sigmas must be positive");
        mean_true += true_sigmas[i];
    }
    mean_true /= static_cast<double>(n);

    double ss_res = 0.0, ss_tot = 0.0, rel = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = pred_sigmas[i] - true_sigmas[i];
        ss_res += d * d;
        const double c = true_sigmas[i] - mean_true;
        ss_tot += c * c;
        rel += std::abs(d) / true_sigmas[i];
    }

    Parity out;
    out.rel_err_mean = rel / static_cast<double>(n);
    if (ss_tot == 0.0) {
        out.degenerate = true;
        out.r2 = std::numeric_limits<double>::quiet_NaN();
    } else {
        out.r2 = 1.0 - ss_res / ss_tot;
    }
    return out;
}

CalibrationStudy calibrate_model(const OperatorModel& model, const Dataset& ds,
                                 const std::vector<std::size_t>& records, double f_rescale) {
    if (records.size() < 2)
        throw std::invalid_argument("calibrate: need at least 2 records");

    CalibrationStudy study;
    std::vector<double> all_errors, all_sigmas, true_s, pred_s;

    for (std::size_t ri : records) {
        if (ri >= ds.records.size())
            throw std::invalid_argument("calibrate: record index out of range");
        const DataRecord& rec = ds.records[ri];
        const auto pred = predict_record(model, ds, ri, f_rescale);

        std::vector<double> errors(rec.targets.size());
        for (std::size_t e = 0; e < errors.size(); ++e) errors[e] = pred.mu[e] - rec.targets[e];

        RecordCalibration rc;
        rc.record = ri;
        rc.length_scale = rec.length_scale;
        rc.moments = error_moments(errors);

        double var = 0.0;
        for (double e : errors) {
            const double d = e - rc.moments.bias;
            var += d * d;
        }
        rc.true_sigma = std::sqrt(var / static_cast<double>(errors.size()));

        double sig_mean = 0.0;
        for (double s : pred.sigma) sig_mean += s;
        rc.pred_sigma_mean = sig_mean / static_cast<double>(pred.sigma.size());

        study.mean_bias += rc.moments.bias;
        study.records.push_back(rc);
        all_errors.insert(all_errors.end(), errors.begin(), errors.end());
        all_sigmas.insert(all_sigmas.end(), pred.sigma.begin(), pred.sigma.end());
        true_s.push_back(rc.true_sigma);
        pred_s.push_back(rc.pred_sigma_mean);
    }

    study.mean_bias /= static_cast<double>(study.records.size());
    study.pooled = coverage(all_errors, all_sigmas);
    study.parity = sigma_parity(true_s, pred_s);
    return study;
}

void write_calibration(const CalibrationStudy& study, const std::string& path) {
    CsvWriter csv(path, {"record", "scale", "bias", "skew", "excess_kurtosis", "degenerate",
                         "true_sigma", "pred_sigma_mean"});
    for (const auto& rc : study.records)
        csv.row({CsvWriter::num(rc.record), CsvWriter::num(rc.length_scale),
                 CsvWriter::num(rc.moments.bias), CsvWriter::num(rc.moments.skew),
                 CsvWriter::num(rc.moments.excess_kurtosis),
                 rc.moments.degenerate ? "1" : "0", CsvWriter::num(rc.true_sigma),
                 CsvWriter::num(rc.pred_sigma_mean)});
    csv.close();
}

void write_coverage(const Coverage& cov, const std::string& path) {
    CsvWriter csv(path, {"c1", "c2", "c3"});
    csv.row({CsvWriter::num(cov.c1), CsvWriter::num(cov.c2), CsvWriter::num(cov.c3)});
    csv.close();
}

}  // namespace opuq
