#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "opuq/dense.hpp"

namespace opuq {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction. Parameters are registered once; step() applies
/// one update with the given learning rate. A null gradient entry means "no
/// gradient reached this parameter" and leaves it untouched.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    std::size_t add_param(std::string name, DenseMatrix* value);

    void step(double lr, const std::vector<const DenseMatrix*>& grads);

    std::uint64_t steps_taken() const { return t_; }
    std::size_t param_count() const { return params_.size(); }

    /// Drops first/second moment state and the step counter; parameters stay
    /// registered.
    void reset_state();

private:
    struct Slot {
        std::string name;
        DenseMatrix* value;
        DenseMatrix m;
        DenseMatrix v;
    };
    AdamConfig cfg_;
    std::vector<Slot> params_;
    std::uint64_t t_ = 0;
};

}  // namespace opuq
