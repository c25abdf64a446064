#pragma once

#include "acube/model.hpp"

#include <functional>

namespace acube {

// Central-difference check of an analytic gradient: perturbs each element
// of p by +-step, re-evaluates f, and returns the max over elements of
// |analytic - fd| / max(|analytic|, |fd|, 1e-8). f must be deterministic
// (verified by evaluating twice) and step positive.
double finite_diff_check(const std::function<double()>& f, Parameter& p,
                         const std::vector<double>& analytic_grad, double step);

// Whole-model check: one backward pass for analytic gradients, then a
// finite-difference sweep over every trainable parameter. Returns the max
// relative error.
double model_gradient_check(Model& model, const Tensor& input, const Tensor& target,
                            LossKind loss, double step = 1e-5);

} // namespace acube
