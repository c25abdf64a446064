#include "acube/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace acube {

double finite_diff_check(const std::function<double()>& f, Parameter& p,
                         const std::vector<double>& analytic_grad, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("finite_diff_check: step must be positive");
    if (analytic_grad.size() != static_cast<size_t>(p.numel()))
        throw std::invalid_argument("finite_diff_check: gradient size mismatch");

    double base = f();
    if (f() != base) throw std::runtime_error("finite_diff_check: f is not deterministic");

    double* w = p.value().mutable_data();
    double max_err = 0.0;
    for (size_t i = 0; i < analytic_grad.size(); ++i) {
        double keep = w[i];
        w[i] = keep + step;
        double hi = f();
        w[i] = keep - step;
        double lo = f();
        w[i] = keep;
        double fd = (hi - lo) / (2.0 * step);
        double a = analytic_grad[i];
        double err = std::fabs(a - fd) / std::max({std::fabs(a), std::fabs(fd), 1e-8});
        max_err = std::max(max_err, err);
    }
    return max_err;
}

double model_gradient_check(Model& model, const Tensor& input, const Tensor& target,
                            LossKind loss, double step) {
    model.zero_grad();
    {
        autograd::GradMode grad_on(true);
        Tensor l = loss_of(loss, model.forward(input), target);
        backward(l);
    }
    auto eval = [&]() { return loss_of(loss, model.forward(input), target).item(); };

    double max_err = 0.0;
    for (Parameter* p : model.parameters()) {
        if (!p->trainable()) continue;
        max_err = std::max(max_err, finite_diff_check(eval, *p, p->grad(), step));
    }
    model.zero_grad();
    return max_err;
}

} // namespace acube
