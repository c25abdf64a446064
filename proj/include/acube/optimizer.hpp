#pragma once

#include "acube/tensor.hpp"

#include <cstdint>
#include <vector>

namespace acube {

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Adaptive-moment-estimation optimizer with bias correction. Not to be
// confused with the dual attention block of the same acronym; this one
// updates parameters.
class AdamOptimizer {
public:
    using Hyper = AdamHyper;

    explicit AdamOptimizer(std::vector<Parameter*> params, AdamHyper hyper = AdamHyper());

    // applies one bias-corrected update from the accumulated gradients
    void step(double lr);
    void zero_grad();
    uint64_t step_count() const { return step_; }

    const std::vector<Parameter*>& params() const { return params_; }
    // serialized state access, aligned with params()
    std::vector<double>& first_moment(size_t i) { return m_[i]; }
    std::vector<double>& second_moment(size_t i) { return v_[i]; }
    void set_step_count(uint64_t s) { step_ = s; }

private:
    std::vector<Parameter*> params_;
    Hyper hyper_;
    std::vector<std::vector<double>> m_, v_;
    uint64_t step_ = 0;
};

// Step-decay schedule: initial_lr * 0.5^floor(iteration / halve_every)
double lr_at(uint64_t iteration, double initial_lr, uint64_t halve_every);

} // namespace acube
