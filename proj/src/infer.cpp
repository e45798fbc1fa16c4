#include "opuq/infer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "opuq/binio.hpp"
#include "opuq/tape.hpp"

namespace opuq {

DenseMatrix PlacementMatrix::scatter(std::span<const double> values) const {
    if (values.size() != entries.size())
        throw std::invalid_argument("placement: vector length does not match entry count");
    DenseMatrix grid(grid_rows, grid_cols);
    for (double& v : grid.flat()) v = fill_value;
    for (std::size_t i = 0; i < entries.size(); ++i)
        grid(entries[i].row, entries[i].col) = values[i];
    return grid;
}

std::vector<double> PlacementMatrix::gather(const DenseMatrix& grid) const {
    if (grid.rows() != grid_rows || grid.cols() != grid_cols)
        throw std::invalid_argument("placement: grid shape mismatch");
    std::vector<double> out(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i)
        out[i] = grid(entries[i].row, entries[i].col);
    return out;
}

InferenceEngine::InferenceEngine(const OperatorModel& model, const Domain& domain)
    : model_(&model) {
    const std::size_t n = domain.masked.size();
    placement_.grid_rows = domain.resolution;
    placement_.grid_cols = domain.resolution;
    placement_.entries.reserve(n);
    DenseMatrix xs(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t idx = domain.masked[i];
        placement_.entries.push_back({static_cast<std::uint32_t>(domain.row_of(idx)),
                                      static_cast<std::uint32_t>(domain.col_of(idx))});
        xs(i, 0) = domain.x_of(idx);
        xs(i, 1) = domain.y_of(idx);
    }
    model.trunk_eval_batch(xs, t_mu_, t_sigma_);
    for (double v : t_mu_.flat())
        if (!std::isfinite(v)) throw std::runtime_error("inference engine: non-finite trunk output");
    for (double v : t_sigma_.flat())
        if (!std::isfinite(v)) throw std::runtime_error("inference engine: non-finite trunk output");
}

std::vector<double> InferenceEngine::join(std::span<const double> sensors,
                                          std::span<const double> boundary) const {
    if (sensors.size() + boundary.size() != model_->config().branch_input)
        throw std::invalid_argument("inference engine: sensor dimensions do not match the model");
    std::vector<double> in;
    in.reserve(sensors.size() + boundary.size());
    in.insert(in.end(), sensors.begin(), sensors.end());
    in.insert(in.end(), boundary.begin(), boundary.end());
    return in;
}

GridPrediction InferenceEngine::infer_grid(std::span<const double> sensors,
                                           std::span<const double> boundary) const {
    const auto in = join(sensors, boundary);
    auto ws = model_->make_workspace();
    std::vector<double> b_mu, b_sigma;
    model_->branch_eval(in, b_mu, b_sigma, ws);

    const std::size_t n = point_count();
    std::vector<double> mu(n), raw(n);
    gemv(Trans::No, 1.0, t_mu_, b_mu, 0.0, mu);
    gemv(Trans::No, 1.0, t_sigma_, b_sigma, 0.0, raw);
    const auto& cfg = model_->config();
    for (double& v : raw) v = std::exp(std::clamp(v, cfg.clip_lo, cfg.clip_hi));
    return {placement_.scatter(mu), placement_.scatter(raw)};
}

std::vector<GridPrediction> InferenceEngine::infer_batch(const DenseMatrix& branch_inputs) const {
    if (branch_inputs.cols() != model_->config().branch_input)
        throw std::invalid_argument("inference engine: sensor dimensions do not match the model");
    const std::size_t batch = branch_inputs.rows();
    const std::size_t basis = model_->config().basis();

    DenseMatrix b_mu(batch, basis), b_sigma(batch, basis);
    auto ws = model_->make_workspace();
    std::vector<double> row_mu, row_sigma;
    for (std::size_t r = 0; r < batch; ++r) {
        model_->branch_eval(std::span<const double>(branch_inputs.row(r), branch_inputs.cols()),
                            row_mu, row_sigma, ws);
        std::copy(row_mu.begin(), row_mu.end(), b_mu.row(r));
        std::copy(row_sigma.begin(), row_sigma.end(), b_sigma.row(r));
    }

    const std::size_t n = point_count();
    DenseMatrix mu(batch, n), raw(batch, n);
    gemm(Trans::No, Trans::Yes, 1.0, b_mu, t_mu_, 0.0, mu);
    gemm(Trans::No, Trans::Yes, 1.0, b_sigma, t_sigma_, 0.0, raw);

    const auto& cfg = model_->config();
    std::vector<GridPrediction> out;
    out.reserve(batch);
    for (std::size_t r = 0; r < batch; ++r) {
        std::span<double> raw_row(raw.row(r), n);
        for (double& v : raw_row) v = std::exp(std::clamp(v, cfg.clip_lo, cfg.clip_hi));
        out.push_back({placement_.scatter({mu.row(r), n}), placement_.scatter(raw_row)});
    }
    return out;
}

GridPrediction InferenceEngine::infer_grid_naive(std::span<const double> sensors,
                                                 std::span<const double> boundary) const {
    const auto in = join(sensors, boundary);
    auto ws = model_->make_workspace();
    const std::size_t n = point_count();
    const std::size_t res = placement_.grid_rows;
    const double h = 1.0 / static_cast<double>(res - 1);
    std::vector<double> mu(n), sigma(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& e = placement_.entries[i];
        const double xy[2] = {static_cast<double>(e.col) * h, static_cast<double>(e.row) * h};
        const PredictiveOutput out = model_->forward(in, xy, ws);
        mu[i] = out.mu;
        sigma[i] = std::exp(out.log_sigma);
    }
    return {placement_.scatter(mu), placement_.scatter(sigma)};
}

Surrogate::Surrogate(const OperatorModel& model, std::span<const double> sensors,
                     std::span<const double> boundary)
    : model_(&model) {
    std::vector<double> in;
    in.reserve(sensors.size() + boundary.size());
    in.insert(in.end(), sensors.begin(), sensors.end());
    in.insert(in.end(), boundary.begin(), boundary.end());
    auto ws = model.make_workspace();
    model.branch_eval(in, b_mu_, b_sigma_, ws);
}

Surrogate::Surrogate(CoeffTag, const OperatorModel& model, std::vector<double> mu_coeffs,
                     std::vector<double> sigma_coeffs)
    : model_(&model), b_mu_(std::move(mu_coeffs)), b_sigma_(std::move(sigma_coeffs)) {
    if (b_mu_.size() != model.config().basis() || b_sigma_.size() != model.config().basis())
        throw std::invalid_argument("surrogate: coefficient length does not match the basis");
}

Surrogate Surrogate::from_coefficients(const OperatorModel& model, std::vector<double> mu_coeffs,
                                       std::vector<double> sigma_coeffs) {
    return Surrogate(CoeffTag{}, model, std::move(mu_coeffs), std::move(sigma_coeffs));
}

PredictiveOutput Surrogate::eval(std::span<const double> x) const {
    DenseMatrix xs(1, x.size());
    std::copy(x.begin(), x.end(), xs.flat().begin());
    DenseMatrix t_mu, t_sigma;
    model_->trunk_eval_batch(xs, t_mu, t_sigma);
    PredictiveOutput out;
    out.mu = dot(b_mu_, t_mu.flat());
    const auto& cfg = model_->config();
    out.log_sigma = std::clamp(dot(b_sigma_, t_sigma.flat()), cfg.clip_lo, cfg.clip_hi);
    return out;
}

namespace {

void require_interior(std::span<const double> x) {
    for (double v : x)
        if (!(v > 0.0 && v < 1.0))
            throw std::invalid_argument(
                "surrogate: derivative queries require a strictly interior point");
}

}  // namespace

std::vector<double> Surrogate::gradient(std::span<const double> x) const {
    require_interior(x);
    if (x.size() != model_->config().trunk_input)
        throw std::invalid_argument("surrogate: query dimension mismatch");
    DenseMatrix xs(1, x.size());
    std::copy(x.begin(), x.end(), xs.flat().begin());
    DenseMatrix coeffs(1, b_mu_.size());
    std::copy(b_mu_.begin(), b_mu_.end(), coeffs.flat().begin());

    Tape tape;
    const NodeId xin = tape.input(xs, true);
    const auto traced = model_->trace_trunk(tape, xin);
    const NodeId b = tape.input(coeffs, false);
    tape.backward(tape.row_inner(b, traced.t_mu));
    const DenseMatrix& g = tape.adjoint(xin);
    return {g.flat().begin(), g.flat().end()};
}

double Surrogate::laplacian(std::span<const double> x) const {
    require_interior(x);
    const double h = 1e-4;
    std::vector<double> probe(x.begin(), x.end());
    double lap = 0.0;
    for (std::size_t d = 0; d < probe.size(); ++d) {
        const double saved = probe[d];
        probe[d] = saved + h;
        const double up = gradient(probe)[d];
        probe[d] = saved - h;
        const double down = gradient(probe)[d];
        probe[d] = saved;
        lap += (up - down) / (2.0 * h);
    }
    return lap;
}

void write_grid_csv(const DenseMatrix& grid, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("grid: cannot open " + path);
    char buf[40];
    for (std::size_t r = 0; r < grid.rows(); ++r) {
        for (std::size_t c = 0; c < grid.cols(); ++c) {
            if (c) out << ',';
            const double v = grid(r, c);
            if (std::isnan(v)) continue;
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("grid: failed writing " + path);
}

void write_grid_bin(const DenseMatrix& grid, const std::string& path) {
    BinWriter w(path);
    w.magic("OPUQGR01");
    w.u64(grid.rows());
    w.u64(grid.cols());
    w.f64_array(grid.flat());
    w.close();
}

DenseMatrix read_grid_bin(const std::string& path) {
    BinReader r(path);
    r.expect_magic("OPUQGR01");
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    const auto flat = r.f64_array();
    if (flat.size() != rows * cols) throw std::runtime_error("grid: corrupt payload in " + path);
    DenseMatrix grid(rows, cols);
    std::copy(flat.begin(), flat.end(), grid.flat().begin());
    return grid;
}

}  // namespace opuq
