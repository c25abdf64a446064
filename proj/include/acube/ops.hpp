#pragma once

#include "acube/tensor.hpp"

#include <vector>

namespace acube {

// Elementwise with numpy-style broadcasting over any axis of extent 1.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double k); // constant factor, not a parameter

Tensor relu(const Tensor& x);
Tensor abs_val(const Tensor& x);

// Zero-padded same-size cross-correlation at stride 1. weight is
// [out_channels, in_channels, k, k] (k odd), bias is [1, out_channels, 1, 1].
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias);

// Max-subtracted softmax along one axis (0..3); shift invariant by
// construction. Rejects non-finite input.
Tensor softmax(const Tensor& x, int axis);

Tensor global_avg_pool(const Tensor& x); // [B,C,H,W] -> [B,C,1,1]

// out(b, c, h*r+i, w*r+j) = in(b, c*r^2 + i*r + j, h, w)
Tensor pixel_shuffle(const Tensor& x, int r);
Tensor pixel_unshuffle(const Tensor& x, int r);

// Sums axes down to a target shape whose extents are equal or 1.
Tensor reduce_sum(const Tensor& x, Shape target);
Tensor sum_all(const Tensor& x);  // [1,1,1,1]
Tensor mean_all(const Tensor& x); // [1,1,1,1]

Tensor concat_channels(const std::vector<Tensor>& parts);
Tensor slice_channels(const Tensor& x, int64_t first, int64_t count);

// Mean absolute / mean squared difference over all elements.
Tensor l1_loss(const Tensor& pred, const Tensor& target);
Tensor l2_loss(const Tensor& pred, const Tensor& target);

// Trainable same-padding convolution layer; owns weight and bias.
struct Conv2dLayer {
    Parameter weight; // [out_channels, in_channels, k, k]
    Parameter bias;   // [1, out_channels, 1, 1]

    Conv2dLayer() = default;
    Conv2dLayer(std::string name, int in_channels, int out_channels, int ksize);

    int in_channels() const { return static_cast<int>(weight.value().shape().c); }
    int out_channels() const { return static_cast<int>(weight.value().shape().b); }
    int ksize() const { return static_cast<int>(weight.value().shape().h); }
    int64_t param_count() const { return weight.numel() + bias.numel(); }

    Tensor forward(const Tensor& x) { return conv2d(x, weight.use(), bias.use()); }
};

} // namespace acube
