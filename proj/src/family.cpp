#include "opuq/family.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace opuq {

PdeFamily parse_family(const std::string& name) {
    if (name == "poisson-homogeneous") return PdeFamily::PoissonHomogeneous;
    if (name == "poisson-inhomogeneous") return PdeFamily::PoissonInhomogeneous;
    if (name == "nonlinear-poisson") return PdeFamily::NonlinearPoisson;
    if (name == "diffusion-reaction") return PdeFamily::DiffusionReaction;
    throw std::runtime_error("unknown pde family: " + name);
}

std::string family_name(PdeFamily f) {
    switch (f) {
        case PdeFamily::PoissonHomogeneous: return "poisson-homogeneous";
        case PdeFamily::PoissonInhomogeneous: return "poisson-inhomogeneous";
        case PdeFamily::NonlinearPoisson: return "nonlinear-poisson";
        case PdeFamily::DiffusionReaction: return "diffusion-reaction";
    }
    throw std::logic_error("family_name: bad enum");
}

double bubble(double x, double y) {
    return 16.0 * x * (1.0 - x) * y * (1.0 - y);
}

namespace {

double cell(const GridFunction& u, const Domain& d, std::size_t r, std::size_t c, std::size_t at) {
    const double v = u.values[d.index(r, c)];
    if (!std::isfinite(v)) {
        throw std::runtime_error("apply_operator: stencil at interior index " + std::to_string(at) +
                                 " reaches an undefined grid cell (" + std::to_string(r) + "," +
                                 std::to_string(c) + ")");
    }
    return v;
}

}  // namespace

OperatorResult apply_operator(PdeFamily family, const GridFunction& u, const Domain& domain) {
    if (u.values.size() != domain.resolution * domain.resolution) {
        throw std::runtime_error("apply_operator: grid function size does not match domain");
    }
    const double h2 = domain.h * domain.h;

    OperatorResult out;
    out.f.reserve(domain.interior.size());
    out.g.reserve(domain.boundary.size());

    for (std::size_t k = 0; k < domain.interior.size(); ++k) {
        const std::size_t idx = domain.interior[k];
        const std::size_t r = domain.row_of(idx);
        const std::size_t c = domain.col_of(idx);
        const double uc = cell(u, domain, r, c, k);
        const double un = cell(u, domain, r - 1, c, k);
        const double us = cell(u, domain, r + 1, c, k);
        const double uw = cell(u, domain, r, c - 1, k);
        const double ue = cell(u, domain, r, c + 1, k);

        double f = 0.0;
        switch (family) {
            case PdeFamily::PoissonHomogeneous:
            case PdeFamily::PoissonInhomogeneous:
                f = (un + us + uw + ue - 4.0 * uc) / h2;
                break;
            case PdeFamily::NonlinearPoisson: {
                // div((1+u^2) grad u) with the coefficient averaged onto faces,
                // which keeps the discrete operator conservative.
                const auto a = [](double v) { return 1.0 + v * v; };
                const double ac = a(uc);
                const double an = 0.5 * (ac + a(un));
                const double as = 0.5 * (ac + a(us));
                const double aw = 0.5 * (ac + a(uw));
                const double ae = 0.5 * (ac + a(ue));
                f = (an * (un - uc) + as * (us - uc) + aw * (uw - uc) + ae * (ue - uc)) / h2;
                break;
            }
            case PdeFamily::DiffusionReaction:
                f = (un + us + uw + ue - 4.0 * uc) / h2 + uc * uc;
                break;
        }
        out.f.push_back(f);
    }

    for (std::size_t k = 0; k < domain.boundary.size(); ++k) {
        const std::size_t idx = domain.boundary[k];
        const double v = u.values[idx];
        if (!std::isfinite(v)) {
            throw std::runtime_error("apply_operator: undefined value on boundary index " +
                                     std::to_string(k));
        }
        if (family == PdeFamily::PoissonHomogeneous) {
            if (std::abs(v) > 1e-9) {
                throw std::runtime_error(
                    "apply_operator: homogeneous family requires a vanishing boundary trace, got " +
                    std::to_string(v));
            }
            out.g.push_back(0.0);
        } else {
            out.g.push_back(v);
        }
    }
    return out;
}

std::vector<double> scatter_interior(const Domain& domain, const std::vector<double>& f) {
    if (f.size() != domain.interior.size()) {
        throw std::runtime_error("scatter_interior: size mismatch");
    }
    std::vector<double> full(domain.resolution * domain.resolution,
                             std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k < f.size(); ++k) full[domain.interior[k]] = f[k];
    return full;
}

}  // namespace opuq
