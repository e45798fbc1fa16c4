#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace opuq {

/// Uniform R x R grid over the unit square, with an optional circular mask.
/// `interior` points have all four stencil neighbors inside the mask;
/// `boundary` points are masked points on the grid edge or adjacent to an
/// unmasked cell.
struct Domain {
    enum class Shape { UnitSquare, UnitCircle };

    Shape shape = Shape::UnitSquare;
    std::size_t resolution = 0;
    double h = 0.0;
    std::vector<std::uint8_t> mask;        // R*R, 1 = point belongs to the domain
    std::vector<std::size_t> interior;     // linear indices, row-major scan order
    std::vector<std::size_t> boundary;     // linear indices, row-major scan order
    std::vector<std::size_t> masked;       // interior ∪ boundary in scan order

    static Domain make(Shape shape, std::size_t resolution);

    std::size_t index(std::size_t row, std::size_t col) const { return row * resolution + col; }
    std::size_t row_of(std::size_t idx) const { return idx / resolution; }
    std::size_t col_of(std::size_t idx) const { return idx % resolution; }
    double x_of(std::size_t idx) const { return static_cast<double>(col_of(idx)) * h; }
    double y_of(std::size_t idx) const { return static_cast<double>(row_of(idx)) * h; }

    bool is_masked(std::size_t row, std::size_t col) const { return mask[index(row, col)] != 0; }
};

Domain::Shape parse_shape(const std::string& name);
std::string shape_name(Domain::Shape s);

/// Values over the full grid; NaN marks cells where the function is not
/// defined (outside the domain mask).
struct GridFunction {
    std::size_t resolution = 0;
    std::vector<double> values;

    GridFunction() = default;
    explicit GridFunction(std::size_t r);
};

}  // namespace opuq
