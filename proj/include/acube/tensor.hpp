#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace acube {

// Extents of a dense 4-D tensor, always ordered [batch, channel, height, width].
struct Shape {
    int64_t b = 0, c = 0, h = 0, w = 0;

    int64_t numel() const { return b * c * h * w; }
    int64_t operator[](int i) const {
        switch (i) {
            case 0: return b;
            case 1: return c;
            case 2: return h;
            default: return w;
        }
    }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

class Parameter;

namespace autograd {

// One recorded operation (or leaf) in the reverse-mode graph. `backprop`
// reads this node's grad and accumulates into the parents' grads.
struct Node {
    Shape shape;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;
    std::vector<double> grad;
    Parameter* param = nullptr; // set on parameter leaves
    bool consumed = false;

    void ensure_grad() {
        if (grad.empty()) grad.assign(static_cast<size_t>(shape.numel()), 0.0);
    }
};

bool enabled();

// RAII switch for graph recording (thread-local). Recording is off by
// default; training and gradient checks turn it on.
class GradMode {
public:
    explicit GradMode(bool on);
    ~GradMode();
    GradMode(const GradMode&) = delete;
    GradMode& operator=(const GradMode&) = delete;

private:
    bool prev_;
};

} // namespace autograd

// Dense 4-D array of doubles with value semantics over a shared buffer.
// Tensors are treated as immutable once they enter an operation; reshape
// returns a view over the same buffer.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape s);
    Tensor(Shape s, std::vector<double> values);

    static Tensor full(Shape s, double v);
    static Tensor scalar(double v) { return full({1, 1, 1, 1}, v); }

    const Shape& shape() const { return shape_; }
    int64_t numel() const { return shape_.numel(); }

    const double* data() const { return buf_->data(); }
    double* mutable_data() { return buf_->data(); }
    const std::vector<double>& values() const { return *buf_; }

    double at(int64_t bi, int64_t ci, int64_t yi, int64_t xi) const {
        return (*buf_)[static_cast<size_t>(((bi * shape_.c + ci) * shape_.h + yi) * shape_.w + xi)];
    }
    double& at(int64_t bi, int64_t ci, int64_t yi, int64_t xi) {
        return (*buf_)[static_cast<size_t>(((bi * shape_.c + ci) * shape_.h + yi) * shape_.w + xi)];
    }
    double item() const; // requires numel() == 1

    // View with a new shape of identical total length; shares the buffer.
    Tensor reshape(Shape s) const;

    Tensor detach() const;

    // Copy of this tensor registered as a fresh non-parameter leaf; its
    // accumulated gradient is readable through leaf_grad() after backward().
    Tensor tracked() const;
    bool requires_grad() const { return node_ != nullptr; }
    const std::vector<double>& leaf_grad() const;

    bool defined() const { return buf_ != nullptr; }

    // graph plumbing, used by the op implementations
    std::shared_ptr<std::vector<double>> buf_;
    std::shared_ptr<autograd::Node> node_;

private:
    Shape shape_;
};

// Named trainable tensor with its gradient accumulator. Frozen parameters
// keep their value but take no part in gradients, counting or updates.
class Parameter {
public:
    Parameter() = default;
    Parameter(std::string name, Tensor value, bool trainable = true);

    Parameter(const Parameter&) = delete;
    Parameter& operator=(const Parameter&) = delete;
    Parameter(Parameter&&) = default;
    Parameter& operator=(Parameter&&) = default;

    const std::string& name() const { return name_; }
    Tensor& value() { return value_; }
    const Tensor& value() const { return value_; }
    std::vector<double>& grad() { return grad_; }
    const std::vector<double>& grad() const { return grad_; }
    bool trainable() const { return trainable_; }
    int64_t numel() const { return value_.numel(); }

    void zero_grad() { grad_.assign(grad_.size(), 0.0); }

    // Value tensor wired to a leaf node when recording is on (and the
    // parameter is trainable); otherwise the plain value.
    Tensor use();

private:
    std::string name_;
    Tensor value_;
    std::vector<double> grad_;
    bool trainable_ = true;
};

// Runs reverse-mode accumulation from a scalar loss. Every reachable
// Parameter receives grad += dloss/dvalue; the graph is consumed.
void backward(const Tensor& loss);

} // namespace acube
