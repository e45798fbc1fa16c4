#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "opuq/dense.hpp"
#include "opuq/domain.hpp"
#include "opuq/model.hpp"

namespace opuq {

/// Index map from flat prediction vectors onto an R x R grid. Entry i names
/// the grid cell receiving vector element i; untouched cells get fill_value.
struct PlacementMatrix {
    struct Entry {
        std::uint32_t row;
        std::uint32_t col;
    };
    std::vector<Entry> entries;
    std::size_t grid_rows = 0;
    std::size_t grid_cols = 0;
    double fill_value = std::numeric_limits<double>::quiet_NaN();

    DenseMatrix scatter(std::span<const double> values) const;
    std::vector<double> gather(const DenseMatrix& grid) const;
};

struct GridPrediction {
    DenseMatrix mu;
    DenseMatrix sigma;
};

/// Precomputes the trunk outputs at every masked grid point of a fixed
/// domain, so repeated inference over new input functions costs one branch
/// pass plus a matrix-vector product per field.
class InferenceEngine {
public:
    InferenceEngine(const OperatorModel& model, const Domain& domain);

    GridPrediction infer_grid(std::span<const double> sensors,
                              std::span<const double> boundary) const;
    std::vector<GridPrediction> infer_batch(const DenseMatrix& branch_inputs) const;

    /// Reference path: full network forward at every masked point, no reuse
    /// of the precomputed trunk. Used as the equivalence/timing oracle.
    GridPrediction infer_grid_naive(std::span<const double> sensors,
                                    std::span<const double> boundary) const;

    const DenseMatrix& trunk_mu() const { return t_mu_; }
    const DenseMatrix& trunk_sigma() const { return t_sigma_; }
    const PlacementMatrix& placement() const { return placement_; }
    std::size_t point_count() const { return placement_.entries.size(); }
    const OperatorModel& model() const { return *model_; }

    void set_fill_value(double v) { placement_.fill_value = v; }

private:
    const OperatorModel* model_;
    DenseMatrix t_mu_;     // E x N
    DenseMatrix t_sigma_;  // E x N
    PlacementMatrix placement_;

    std::vector<double> join(std::span<const double> sensors,
                             std::span<const double> boundary) const;
};

/// Fixed-input fast path: the branch coefficients are computed once, after
/// which every query costs a single trunk pass. Mesh-free in x.
class Surrogate {
public:
    Surrogate(const OperatorModel& model, std::span<const double> sensors,
              std::span<const double> boundary);
    /// Direct-coefficient form, for composing or probing bases.
    static Surrogate from_coefficients(const OperatorModel& model, std::vector<double> mu_coeffs,
                                       std::vector<double> sigma_coeffs);

    PredictiveOutput eval(std::span<const double> x) const;

    /// d mu / dx via reverse-mode differentiation of the trunk. x must lie in
    /// the open unit square.
    std::vector<double> gradient(std::span<const double> x) const;

    /// Laplacian of mu via central differences of the exact gradient,
    /// step 1e-4. Same interiority requirement.
    double laplacian(std::span<const double> x) const;

    const std::vector<double>& coefficients() const { return b_mu_; }
    const std::vector<double>& sigma_coefficients() const { return b_sigma_; }

private:
    struct CoeffTag {};
    Surrogate(CoeffTag, const OperatorModel& model, std::vector<double> mu_coeffs,
              std::vector<double> sigma_coeffs);

    const OperatorModel* model_;
    std::vector<double> b_mu_;
    std::vector<double> b_sigma_;
};

/// Headerless numeric CSV, row-major; NaN cells are written blank.
void write_grid_csv(const DenseMatrix& grid, const std::string& path);
/// Flat f64 envelope with magic "OPUQGR01": rows, cols, row-major payload.
void write_grid_bin(const DenseMatrix& grid, const std::string& path);
DenseMatrix read_grid_bin(const std::string& path);

}  // namespace opuq
