#pragma once

#include <string>
#include <vector>

#include "opuq/domain.hpp"

namespace opuq {

enum class PdeFamily {
    PoissonHomogeneous,   // Δu = f with u|∂Ω = 0
    PoissonInhomogeneous, // Δu = f with boundary trace g
    NonlinearPoisson,     // div((1 + u²) ∇u) = f
    DiffusionReaction,    // Δu + u² = f
};

PdeFamily parse_family(const std::string& name);
std::string family_name(PdeFamily f);

struct OperatorResult {
    std::vector<double> f;  // values at domain.interior, in order
    std::vector<double> g;  // values at domain.boundary, in order
};

/// Applies the family's forward differential operator with centered
/// second-order stencils and takes the boundary trace. For the homogeneous
/// family the trace must vanish (the generation pipeline guarantees it) and g
/// is emitted as exact zeros.
OperatorResult apply_operator(PdeFamily family, const GridFunction& u, const Domain& domain);

/// f values scattered back onto the full grid (NaN off-interior), convenient
/// for sensor lookups.
std::vector<double> scatter_interior(const Domain& domain, const std::vector<double>& f);

/// Smooth cutoff x(1-x)y(1-y) scaled to unit max; multiplying a sample by it
/// forces an exactly-zero trace on the unit square.
double bubble(double x, double y);

}  // namespace opuq
