#include "acube/model.hpp"

#include "acube/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace acube {

void ModelConfig::validate() const {
    if (task == Task::super_resolution && scale != 2 && scale != 3 && scale != 4)
        throw std::invalid_argument("ModelConfig: scale must be 2, 3 or 4");
    if (trunk_channels < 1) throw std::invalid_argument("ModelConfig: zero trunk channels");
    if (num_groups < 1 || units_per_group < 1)
        throw std::invalid_argument("ModelConfig: groups and units must be positive");
    if (bottleneck_ratio < 1) throw std::invalid_argument("ModelConfig: bottleneck ratio must be positive");
    if (trunk_style == TrunkStyle::ablation_16_resblocks && group_conv)
        throw std::invalid_argument("ModelConfig: the ablation trunk has no group convs");
}

ResidualBlock::ResidualBlock(const std::string& prefix, int channels)
    : conv1(prefix + ".conv1", channels, channels, 3),
      conv2(prefix + ".conv2", channels, channels, 3) {}

Tensor ResidualBlock::forward(const Tensor& x) {
    return add(x, conv2.forward(relu(conv1.forward(x))));
}

Tensor rdau_forward(const Tensor& x, Rdau& unit, AttentionTrace* trace) {
    return adam_forward(unit.res.forward(x), unit.adam, trace);
}

Tensor rdag_forward(const Tensor& x, Rdag& group, AttentionTrace* trace) {
    Tensor t = x;
    for (Rdau& u : group.units) t = rdau_forward(t, u, trace);
    if (group.tail_conv) t = group.tail_conv->forward(t);
    return add(x, t);
}

Tensor Model::forward(const Tensor& img, AttentionTrace* trace) {
    if (img.shape().c != cfg.in_channels())
        throw std::invalid_argument("Model::forward: expected " +
                                    std::to_string(cfg.in_channels()) + " channels, got " +
                                    img.shape().str());
    Tensor f0 = head.forward(img);
    Tensor f = f0;
    std::vector<Tensor> feats;
    feats.reserve(groups.size());
    for (Rdag& g : groups) {
        f = rdag_forward(f, g, trace);
        feats.push_back(f);
    }
    Tensor deep = aham ? aham_forward(feats, *aham, trace) : feats.back();
    Tensor fdf = add(f0, fuse.forward(deep));
    for (UpscaleStage& st : upscale) fdf = pixel_shuffle(st.conv.forward(fdf), st.factor);
    return tail.forward(fdf);
}

Tensor model_forward(Model& m, const Tensor& img) { return m.forward(img); }

void Model::visit_params(const std::function<void(Parameter&)>& fn) {
    auto visit_conv = [&](Conv2dLayer& l) {
        fn(l.weight);
        fn(l.bias);
    };
    visit_conv(head);
    for (Rdag& g : groups) {
        for (Rdau& u : g.units) {
            visit_conv(u.res.conv1);
            visit_conv(u.res.conv2);
            if (u.adam.asab) {
                visit_conv(u.adam.asab->squeeze);
                visit_conv(u.adam.asab->bottleneck_down);
                visit_conv(u.adam.asab->bottleneck_up);
                fn(u.adam.asab->alpha);
            }
            if (u.adam.acab) {
                visit_conv(u.adam.acab->transform1);
                visit_conv(u.adam.acab->transform2);
                fn(u.adam.acab->beta);
            }
        }
        if (g.tail_conv) visit_conv(*g.tail_conv);
    }
    if (aham) {
        for (Conv2dLayer& sq : aham->squeezers) visit_conv(sq);
        fn(aham->gamma);
    }
    visit_conv(fuse);
    for (UpscaleStage& st : upscale) visit_conv(st.conv);
    visit_conv(tail);
}

std::vector<Parameter*> Model::parameters() {
    std::vector<Parameter*> out;
    visit_params([&](Parameter& p) { out.push_back(&p); });
    return out;
}

int64_t Model::count_params() {
    int64_t n = 0;
    visit_params([&](Parameter& p) {
        if (p.trainable()) n += p.numel();
    });
    return n;
}

void Model::zero_grad() {
    visit_params([](Parameter& p) { p.zero_grad(); });
}

Model build_model(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    const int C = cfg.trunk_channels;
    const int G = cfg.effective_groups();
    const int U = cfg.effective_units();

    Model m;
    m.cfg = cfg;
    m.head = Conv2dLayer("head", cfg.in_channels(), C, 3);
    for (int g = 0; g < G; ++g) {
        Rdag group;
        const std::string gp = "groups." + std::to_string(g);
        for (int u = 0; u < U; ++u) {
            Rdau unit;
            const std::string up = gp + ".units." + std::to_string(u);
            unit.res = ResidualBlock(up + ".res", C);
            unit.adam = AdamBlockParams(up + ".adam", C, cfg.bottleneck_ratio, cfg.adam_variant);
            group.units.push_back(std::move(unit));
        }
        if (cfg.group_conv) group.tail_conv = Conv2dLayer(gp + ".tail", C, C, 3);
        m.groups.push_back(std::move(group));
    }
    if (cfg.aham_enabled) m.aham = AhamParams("aham", C, G);
    m.fuse = Conv2dLayer("fuse", C, C, 3);
    if (cfg.has_upscale()) {
        if (cfg.scale == 4) {
            m.upscale.push_back({Conv2dLayer("upscale.0", C, C * 4, 3), 2});
            m.upscale.push_back({Conv2dLayer("upscale.1", C, C * 4, 3), 2});
        } else {
            int r = cfg.scale;
            m.upscale.push_back({Conv2dLayer("upscale.0", C, C * r * r, 3), r});
        }
    }
    m.tail = Conv2dLayer("tail", C, cfg.out_channels(), 3);

    // fan-in-scaled uniform weights; the stream key is the parameter name,
    // so shared layers get identical weights across variant configs
    m.visit_params([&](Parameter& p) {
        // only conv weights draw random values; biases and the adaptive
        // weights keep their constructed zeros (or frozen ones)
        if (p.name().size() < 7 || p.name().rfind(".weight") != p.name().size() - 7) return;
        const Shape s = p.value().shape();
        double bound = 1.0 / std::sqrt(static_cast<double>(s.c * s.h * s.w));
        StreamRng rng(seed, "init/" + p.name());
        double* d = p.value().mutable_data();
        for (int64_t i = 0; i < p.numel(); ++i) d[i] = rng.next_uniform(-bound, bound);
    });
    return m;
}

Tensor loss_of(LossKind kind, const Tensor& pred, const Tensor& target) {
    return kind == LossKind::l1 ? l1_loss(pred, target) : l2_loss(pred, target);
}

} // namespace acube
