#include "acube/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace acube {

AdamOptimizer::AdamOptimizer(std::vector<Parameter*> params, Hyper hyper)
    : params_(std::move(params)), hyper_(hyper) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (Parameter* p : params_) {
        m_.emplace_back(static_cast<size_t>(p->numel()), 0.0);
        v_.emplace_back(static_cast<size_t>(p->numel()), 0.0);
    }
}

void AdamOptimizer::step(double lr) {
    if (!(lr > 0.0)) throw std::invalid_argument("AdamOptimizer::step: lr must be positive");
    ++step_;
    const double b1 = hyper_.beta1, b2 = hyper_.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    for (size_t k = 0; k < params_.size(); ++k) {
        Parameter* p = params_[k];
        if (!p->trainable()) continue;
        double* w = p->value().mutable_data();
        const std::vector<double>& g = p->grad();
        std::vector<double>& m = m_[k];
        std::vector<double>& v = v_[k];
        for (size_t i = 0; i < g.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            w[i] -= lr * mhat / (std::sqrt(vhat) + hyper_.epsilon);
        }
    }
}

void AdamOptimizer::zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
}

double lr_at(uint64_t iteration, double initial_lr, uint64_t halve_every) {
    if (halve_every == 0) return initial_lr;
    uint64_t halvings = iteration / halve_every;
    return initial_lr * std::pow(0.5, static_cast<double>(halvings));
}

} // namespace acube
