#include "acube/attention.hpp"

#include <stdexcept>

namespace acube {

int bottleneck_width(int channels, int ratio) {
    if (channels < 1 || ratio < 1)
        throw std::invalid_argument("bottleneck_width: channels and ratio must be positive");
    return (channels + ratio - 1) / ratio;
}

AsabParams::AsabParams(const std::string& prefix, int channels, int bottleneck_ratio,
                       bool adaptive_weight)
    : squeeze(prefix + ".squeeze", channels, 1, 1),
      bottleneck_down(prefix + ".down", channels, bottleneck_width(channels, bottleneck_ratio), 1),
      bottleneck_up(prefix + ".up", bottleneck_width(channels, bottleneck_ratio), channels, 1),
      alpha(prefix + ".alpha", Tensor::scalar(adaptive_weight ? 0.0 : 1.0), adaptive_weight) {}

AcabParams::AcabParams(const std::string& prefix, bool adaptive_weight)
    : transform1(prefix + ".transform1", 1, 1, 3),
      transform2(prefix + ".transform2", 1, 1, 3),
      beta(prefix + ".beta", Tensor::scalar(adaptive_weight ? 0.0 : 1.0), adaptive_weight) {}

AdamBlockParams::AdamBlockParams(const std::string& prefix, int channels, int bottleneck_ratio,
                                 AdamVariant v)
    : variant(v) {
    bool adaptive = v != AdamVariant::no_adaptive_weights;
    if (v == AdamVariant::full || v == AdamVariant::spatial_only ||
        v == AdamVariant::no_adaptive_weights)
        asab.emplace(prefix + ".asab", channels, bottleneck_ratio, adaptive);
    if (v == AdamVariant::full || v == AdamVariant::channel_only ||
        v == AdamVariant::no_adaptive_weights)
        acab.emplace(prefix + ".acab", adaptive);
}

AhamParams::AhamParams(const std::string& prefix, int channels, int num_groups)
    : gamma(prefix + ".gamma", Tensor::scalar(0.0)) {
    if (num_groups < 1) throw std::invalid_argument("AhamParams: need at least one group");
    squeezers.reserve(num_groups);
    for (int g = 0; g < num_groups; ++g)
        squeezers.emplace_back(prefix + ".squeeze." + std::to_string(g), channels, 1, 1);
}

Tensor asab_forward(const Tensor& x, AsabParams& p, AttentionTrace* trace) {
    const Shape s = x.shape();
    if (s.c != p.squeeze.in_channels())
        throw std::invalid_argument("asab_forward: input has " + std::to_string(s.c) +
                                    " channels, params expect " +
                                    std::to_string(p.squeeze.in_channels()));
    // squeeze channels to one map, softmax jointly over all H*W positions
    Tensor scores = p.squeeze.forward(x);                              // [B,1,H,W]
    Tensor flat = scores.reshape({s.b, 1, s.h * s.w, 1});
    Tensor weights = softmax(flat, 2).reshape({s.b, 1, s.h, s.w});     // [B,1,H,W]
    if (trace) trace->spatial_weights.push_back(weights.detach());
    // weighted sum of pixel features per channel
    Tensor context = reduce_sum(mul(x, weights), {s.b, s.c, 1, 1});    // [B,C,1,1]
    Tensor transformed = p.bottleneck_up.forward(relu(p.bottleneck_down.forward(context)));
    return mul(p.alpha.use(), transformed);                            // [B,C,1,1]
}

Tensor acab_forward(const Tensor& x, AcabParams& p, AttentionTrace* trace) {
    const Shape s = x.shape();
    if (s.h < 1 || s.w < 1)
        throw std::invalid_argument("acab_forward: empty spatial extent " + s.str());
    // squeeze each channel to its spatial mean, softmax over channels
    Tensor means = global_avg_pool(x);                                 // [B,C,1,1]
    Tensor weights = softmax(means, 1);                                // [B,C,1,1]
    if (trace) trace->channel_weights.push_back(weights.detach());
    // weighted sum of channel maps into a single plane
    Tensor context = reduce_sum(mul(x, weights), {s.b, 1, s.h, s.w});  // [B,1,H,W]
    Tensor transformed = p.transform2.forward(relu(p.transform1.forward(context)));
    return mul(p.beta.use(), transformed);                             // [B,1,H,W]
}

Tensor adam_forward(const Tensor& x, AdamBlockParams& p, AttentionTrace* trace) {
    if (p.variant == AdamVariant::off) return x;
    Tensor out = x;
    if (p.asab) out = add(out, asab_forward(x, *p.asab, trace));
    if (p.acab) out = add(out, acab_forward(x, *p.acab, trace));
    return out;
}

Tensor aham_forward(const std::vector<Tensor>& feats, AhamParams& p, AttentionTrace* trace) {
    if (feats.empty()) throw std::invalid_argument("aham_forward: empty feature list");
    if (feats.size() != p.squeezers.size())
        throw std::invalid_argument("aham_forward: " + std::to_string(feats.size()) +
                                    " feature maps but " + std::to_string(p.squeezers.size()) +
                                    " squeezers");
    const Shape s = feats[0].shape();
    for (const Tensor& f : feats)
        if (!(f.shape() == s))
            throw std::invalid_argument("aham_forward: shape disagreement " + f.shape().str() +
                                        " vs " + s.str());
    const int64_t G = static_cast<int64_t>(feats.size());

    // one scalar per group from its pooled features
    std::vector<Tensor> scores;
    scores.reserve(feats.size());
    for (size_t g = 0; g < feats.size(); ++g)
        scores.push_back(p.squeezers[g].forward(global_avg_pool(feats[g]))); // [B,1,1,1]
    Tensor weights = softmax(concat_channels(scores), 1);                    // [B,G,1,1]
    if (trace) trace->hierarchical_weights.push_back(weights.detach());

    Tensor mixed;
    for (int64_t g = 0; g < G; ++g) {
        Tensor term = mul(feats[g], slice_channels(weights, g, 1));
        mixed = g == 0 ? term : add(mixed, term);
    }
    return add(feats.back(), mul(p.gamma.use(), mixed));
}

} // namespace acube
