#include "opuq/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace opuq {

std::size_t Adam::add_param(std::string name, DenseMatrix* value) {
    if (value == nullptr) throw std::invalid_argument("adam: null parameter " + name);
    Slot s;
    s.name = std::move(name);
    s.value = value;
    s.m.resize(value->rows(), value->cols());
    s.v.resize(value->rows(), value->cols());
    params_.push_back(std::move(s));
    return params_.size() - 1;
}

void Adam::step(double lr, const std::vector<const DenseMatrix*>& grads) {
    if (grads.size() != params_.size()) throw std::invalid_argument("adam: gradient count mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t p = 0; p < params_.size(); ++p) {
        const DenseMatrix* g = grads[p];
        if (g == nullptr) continue;
        Slot& s = params_[p];
        if (!g->same_shape(*s.value))
            throw std::invalid_argument("adam: gradient shape mismatch for " + s.name);
        auto gv = g->flat();
        auto mv = s.m.flat();
        auto vv = s.v.flat();
        auto xv = s.value->flat();
        for (std::size_t i = 0; i < gv.size(); ++i) {
            const double gi = gv[i];
            if (!std::isfinite(gi))
                throw std::runtime_error("adam: non-finite gradient in parameter " + s.name);
            mv[i] = cfg_.beta1 * mv[i] + (1.0 - cfg_.beta1) * gi;
            vv[i] = cfg_.beta2 * vv[i] + (1.0 - cfg_.beta2) * gi * gi;
            const double mhat = mv[i] / bc1;
            const double vhat = vv[i] / bc2;
            xv[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

void Adam::reset_state() {
    t_ = 0;
    for (Slot& s : params_) {
        s.m.set_zero();
        s.v.set_zero();
    }
}

}  // namespace opuq
