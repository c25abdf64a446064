#pragma once

#include "acube/ops.hpp"

#include <optional>
#include <string>
#include <vector>

namespace acube {

// Spatial attention branch: softmax over all pixel positions of a
// channel-squeezed map, weighted sum of pixel features, bottleneck
// transform, scaled by a learned weight that starts at 0.
struct AsabParams {
    Conv2dLayer squeeze;         // C -> 1, 1x1
    Conv2dLayer bottleneck_down; // C -> ceil(C/r), 1x1
    Conv2dLayer bottleneck_up;   // ceil(C/r) -> C, 1x1
    Parameter alpha;             // scalar, init 0 (frozen at 1 for the NW variant)

    AsabParams() = default;
    AsabParams(const std::string& prefix, int channels, int bottleneck_ratio,
               bool adaptive_weight = true);
};

// Channel attention branch: softmax over per-channel spatial means,
// weighted sum of channel maps into one plane, two 3x3 transforms,
// scaled by a learned weight that starts at 0.
struct AcabParams {
    Conv2dLayer transform1; // 1 -> 1, 3x3
    Conv2dLayer transform2; // 1 -> 1, 3x3
    Parameter beta;         // scalar, init 0 (frozen at 1 for the NW variant)

    AcabParams() = default;
    AcabParams(const std::string& prefix, bool adaptive_weight = true);
};

enum class AdamVariant { full, spatial_only, channel_only, no_adaptive_weights, off };

struct AdamBlockParams {
    std::optional<AsabParams> asab;
    std::optional<AcabParams> acab;
    AdamVariant variant = AdamVariant::full;

    AdamBlockParams() = default;
    AdamBlockParams(const std::string& prefix, int channels, int bottleneck_ratio,
                    AdamVariant variant);
};

// Hierarchical attention: per-group squeeze to one scalar, softmax over
// groups, weighted sum of the group feature maps added to the last one.
struct AhamParams {
    std::vector<Conv2dLayer> squeezers; // each C -> 1, 1x1
    Parameter gamma;                    // scalar, init 0

    AhamParams() = default;
    AhamParams(const std::string& prefix, int channels, int num_groups);
};

// Attention weights captured from a forward pass, for invariant checks.
struct AttentionTrace {
    std::vector<Tensor> spatial_weights;      // [B,1,H,W] per ASAB call
    std::vector<Tensor> channel_weights;      // [B,C,1,1] per ACAB call
    std::vector<Tensor> hierarchical_weights; // [B,G,1,1] per AHAM call
};

Tensor asab_forward(const Tensor& x, AsabParams& p, AttentionTrace* trace = nullptr);
Tensor acab_forward(const Tensor& x, AcabParams& p, AttentionTrace* trace = nullptr);
Tensor adam_forward(const Tensor& x, AdamBlockParams& p, AttentionTrace* trace = nullptr);
Tensor aham_forward(const std::vector<Tensor>& feats, AhamParams& p,
                    AttentionTrace* trace = nullptr);

int bottleneck_width(int channels, int ratio); // ceil(C / r)

} // namespace acube
