#include "opuq/domain.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace opuq {

namespace {

bool inside_shape(Domain::Shape shape, double x, double y) {
    if (shape == Domain::Shape::UnitSquare) return true;
    const double dx = x - 0.5;
    const double dy = y - 0.5;
    return dx * dx + dy * dy <= 0.25;
}

}  // namespace

Domain Domain::make(Shape shape, std::size_t resolution) {
    if (resolution < 4) throw std::invalid_argument("domain: resolution must be at least 4");
    Domain d;
    d.shape = shape;
    d.resolution = resolution;
    d.h = 1.0 / static_cast<double>(resolution - 1);
    const std::size_t n = resolution * resolution;
    d.mask.assign(n, 0);
    for (std::size_t r = 0; r < resolution; ++r)
        for (std::size_t c = 0; c < resolution; ++c)
            d.mask[d.index(r, c)] =
                inside_shape(shape, static_cast<double>(c) * d.h, static_cast<double>(r) * d.h) ? 1 : 0;

    // Classify; drop masked nubs whose boundary point would not touch any
    // interior cell, then re-classify (at most a few passes for these shapes).
    auto classify = [&]() {
        d.interior.clear();
        d.boundary.clear();
        d.masked.clear();
        for (std::size_t r = 0; r < resolution; ++r) {
            for (std::size_t c = 0; c < resolution; ++c) {
                const std::size_t idx = d.index(r, c);
                if (!d.mask[idx]) continue;
                d.masked.push_back(idx);
                const bool on_edge = r == 0 || c == 0 || r == resolution - 1 || c == resolution - 1;
                const bool hole = !on_edge && (!d.mask[d.index(r - 1, c)] || !d.mask[d.index(r + 1, c)] ||
                                               !d.mask[d.index(r, c - 1)] || !d.mask[d.index(r, c + 1)]);
                if (on_edge || hole)
                    d.boundary.push_back(idx);
                else
                    d.interior.push_back(idx);
            }
        }
    };
    classify();
    for (int pass = 0; pass < 8; ++pass) {
        std::vector<std::uint8_t> is_interior(n, 0);
        for (std::size_t idx : d.interior) is_interior[idx] = 1;
        bool changed = false;
        for (std::size_t idx : d.boundary) {
            const std::size_t r = d.row_of(idx), c = d.col_of(idx);
            bool touches_interior = (r > 0 && is_interior[d.index(r - 1, c)]) ||
                                    (r + 1 < resolution && is_interior[d.index(r + 1, c)]) ||
                                    (c > 0 && is_interior[d.index(r, c - 1)]) ||
                                    (c + 1 < resolution && is_interior[d.index(r, c + 1)]);
            if (!touches_interior) {
                d.mask[idx] = 0;
                changed = true;
            }
        }
        if (!changed) break;
        classify();
    }
    std::vector<std::uint8_t> is_interior(n, 0);
    for (std::size_t idx : d.interior) is_interior[idx] = 1;
    for (std::size_t idx : d.boundary) {
        const std::size_t r = d.row_of(idx), c = d.col_of(idx);
        const bool touches = (r > 0 && is_interior[d.index(r - 1, c)]) ||
                             (r + 1 < resolution && is_interior[d.index(r + 1, c)]) ||
                             (c > 0 && is_interior[d.index(r, c - 1)]) ||
                             (c + 1 < resolution && is_interior[d.index(r, c + 1)]);
        if (!touches)
            throw std::runtime_error("domain: boundary point without interior neighbor at index " +
                                     std::to_string(idx));
    }
    if (d.interior.empty()) throw std::runtime_error("domain: no interior points at this resolution");
    return d;
}

Domain::Shape parse_shape(const std::string& name) {
    if (name == "square" || name == "unit-square") return Domain::Shape::UnitSquare;
    if (name == "circle" || name == "unit-circle") return Domain::Shape::UnitCircle;
    throw std::invalid_argument("unknown domain shape: " + name);
}

std::string shape_name(Domain::Shape s) {
    return s == Domain::Shape::UnitSquare ? "unit-square" : "unit-circle";
}

GridFunction::GridFunction(std::size_t r)
    : resolution(r), values(r * r, std::numeric_limits<double>::quiet_NaN()) {}

}  // namespace opuq
