#include "acube/tensor.hpp"

#include <stdexcept>
#include <unordered_set>

namespace acube {

std::string Shape::str() const {
    return "[" + std::to_string(b) + "," + std::to_string(c) + "," +
           std::to_string(h) + "," + std::to_string(w) + "]";
}

namespace autograd {

namespace {
thread_local bool g_grad_enabled = false;
}

bool enabled() { return g_grad_enabled; }

GradMode::GradMode(bool on) : prev_(g_grad_enabled) { g_grad_enabled = on; }
GradMode::~GradMode() { g_grad_enabled = prev_; }

} // namespace autograd

Tensor::Tensor(Shape s)
    : buf_(std::make_shared<std::vector<double>>(static_cast<size_t>(s.numel()), 0.0)),
      shape_(s) {
    if (s.b < 0 || s.c < 0 || s.h < 0 || s.w < 0)
        throw std::invalid_argument("Tensor: negative extent " + s.str());
}

Tensor::Tensor(Shape s, std::vector<double> values) : Tensor(s) {
    if (static_cast<int64_t>(values.size()) != s.numel())
        throw std::invalid_argument("Tensor: data length " + std::to_string(values.size()) +
                                    " does not match shape " + s.str());
    *buf_ = std::move(values);
}

Tensor Tensor::full(Shape s, double v) {
    Tensor t(s);
    for (auto& x : *t.buf_) x = v;
    return t;
}

double Tensor::item() const {
    if (numel() != 1) throw std::invalid_argument("Tensor::item: shape " + shape_.str() + " is not scalar");
    return (*buf_)[0];
}

Tensor Tensor::reshape(Shape s) const {
    if (s.numel() != numel())
        throw std::invalid_argument("reshape: cannot view " + shape_.str() + " as " + s.str());
    Tensor t;
    t.buf_ = buf_;
    t.shape_ = s;
    if (node_) {
        if (autograd::enabled()) {
            auto node = std::make_shared<autograd::Node>();
            node->shape = s;
            node->parents = {node_};
            node->backprop = [](autograd::Node& self) {
                auto& p = *self.parents[0];
                p.ensure_grad();
                for (size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
            };
            t.node_ = node;
        }
    }
    return t;
}

Tensor Tensor::detach() const {
    Tensor t;
    t.buf_ = buf_;
    t.shape_ = shape_;
    return t;
}

Tensor Tensor::tracked() const {
    Tensor t;
    t.buf_ = std::make_shared<std::vector<double>>(*buf_);
    t.shape_ = shape_;
    t.node_ = std::make_shared<autograd::Node>();
    t.node_->shape = shape_;
    return t;
}

const std::vector<double>& Tensor::leaf_grad() const {
    if (!node_) throw std::runtime_error("leaf_grad: tensor is not tracked");
    const_cast<autograd::Node*>(node_.get())->ensure_grad();
    return node_->grad;
}

Parameter::Parameter(std::string name, Tensor value, bool trainable)
    : name_(std::move(name)),
      value_(value.detach()),
      grad_(static_cast<size_t>(value.numel()), 0.0),
      trainable_(trainable) {}

Tensor Parameter::use() {
    if (!autograd::enabled() || !trainable_) return value_.detach();
    Tensor t = value_.detach();
    t.node_ = std::make_shared<autograd::Node>();
    t.node_->shape = value_.shape();
    t.node_->param = this;
    return t;
}

void backward(const Tensor& loss) {
    if (!loss.node_)
        throw std::invalid_argument("backward: loss is not connected to a recorded graph");
    if (loss.numel() != 1)
        throw std::invalid_argument("backward: loss must be scalar, got " + loss.shape().str());
    if (loss.node_->consumed)
        throw std::runtime_error("backward: graph already consumed");

    // topological order: reverse DFS post-order puts each node before its parents
    std::vector<autograd::Node*> order;
    std::unordered_set<autograd::Node*> seen;
    struct Frame {
        autograd::Node* node;
        size_t next_parent;
    };
    std::vector<Frame> stack{{loss.node_.get(), 0}};
    seen.insert(loss.node_.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            autograd::Node* p = f.node->parents[f.next_parent++].get();
            if (seen.insert(p).second) stack.push_back({p, 0});
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    loss.node_->ensure_grad();
    loss.node_->grad[0] = 1.0;

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        autograd::Node* n = *it;
        n->ensure_grad();
        if (n->backprop) n->backprop(*n);
        if (n->param) {
            auto& g = n->param->grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += n->grad[i];
        }
    }

    // release captured buffers; a second backward over this graph is an error
    for (autograd::Node* n : order) {
        n->backprop = nullptr;
        n->consumed = true;
    }
}

} // namespace acube
