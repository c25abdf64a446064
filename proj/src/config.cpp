#include "acube/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace acube {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (...) {
        throw std::invalid_argument("config: bad number for " + key + ": '" + v + "'");
    }
}

int64_t to_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        long long d = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (...) {
        throw std::invalid_argument("config: bad integer for " + key + ": '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    throw std::invalid_argument("config: bad flag for " + key + ": '" + v + "'");
}

std::string fmt_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

const char* task_name(Task t) {
    switch (t) {
        case Task::super_resolution: return "sr";
        case Task::denoise: return "denoise";
        default: return "deblock";
    }
}

const char* variant_name(AdamVariant v) {
    switch (v) {
        case AdamVariant::full: return "full";
        case AdamVariant::spatial_only: return "s";
        case AdamVariant::channel_only: return "c";
        case AdamVariant::no_adaptive_weights: return "nw";
        default: return "off";
    }
}

} // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        " is not key=value: '" + line + "'");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw std::invalid_argument("config: empty key on line " + std::to_string(lineno));
        if (out.count(key)) throw std::invalid_argument("config: duplicate key " + key);
        out[key] = val;
    }
    return out;
}

TrainConfig parse_train_config(const std::string& text) {
    TrainConfig cfg;
    auto kv = parse_key_values(text);
    for (const auto& [key, val] : kv) {
        if (key == "task") {
            if (val == "sr")
                cfg.model.task = Task::super_resolution;
            else if (val == "denoise")
                cfg.model.task = Task::denoise;
            else if (val == "deblock")
                cfg.model.task = Task::deblock;
            else
                throw std::invalid_argument("config: unknown task '" + val + "'");
        } else if (key == "scale") {
            cfg.model.scale = static_cast<int>(to_int(key, val));
        } else if (key == "channels") {
            cfg.model.trunk_channels = static_cast<int>(to_int(key, val));
        } else if (key == "groups") {
            cfg.model.num_groups = static_cast<int>(to_int(key, val));
        } else if (key == "units") {
            cfg.model.units_per_group = static_cast<int>(to_int(key, val));
        } else if (key == "bottleneck_ratio") {
            cfg.model.bottleneck_ratio = static_cast<int>(to_int(key, val));
        } else if (key == "adam_variant") {
            if (val == "full")
                cfg.model.adam_variant = AdamVariant::full;
            else if (val == "s")
                cfg.model.adam_variant = AdamVariant::spatial_only;
            else if (val == "c")
                cfg.model.adam_variant = AdamVariant::channel_only;
            else if (val == "nw")
                cfg.model.adam_variant = AdamVariant::no_adaptive_weights;
            else if (val == "off")
                cfg.model.adam_variant = AdamVariant::off;
            else
                throw std::invalid_argument("config: unknown adam_variant '" + val + "'");
        } else if (key == "aham") {
            cfg.model.aham_enabled = to_bool(key, val);
        } else if (key == "group_conv") {
            cfg.model.group_conv = to_bool(key, val);
        } else if (key == "trunk_style") {
            if (val == "rdag")
                cfg.model.trunk_style = TrunkStyle::rdag;
            else if (val == "ablation16")
                cfg.model.trunk_style = TrunkStyle::ablation_16_resblocks;
            else
                throw std::invalid_argument("config: unknown trunk_style '" + val + "'");
        } else if (key == "sigma") {
            cfg.degradation.sigma255 = to_double(key, val);
        } else if (key == "quality") {
            cfg.degradation.quality = static_cast<int>(to_int(key, val));
        } else if (key == "lr") {
            cfg.initial_lr = to_double(key, val);
        } else if (key == "lr_halve_every") {
            cfg.halve_every = static_cast<uint64_t>(to_int(key, val));
        } else if (key == "max_iters") {
            cfg.max_iters = static_cast<uint64_t>(to_int(key, val));
        } else if (key == "batch") {
            cfg.batch = static_cast<int>(to_int(key, val));
        } else if (key == "patch") {
            cfg.patch = static_cast<int>(to_int(key, val));
        } else if (key == "augment") {
            cfg.augment = to_bool(key, val);
        } else if (key == "seed") {
            cfg.seed = static_cast<uint64_t>(to_int(key, val));
        } else if (key == "loss") {
            if (val == "l1")
                cfg.loss = LossKind::l1;
            else if (val == "l2")
                cfg.loss = LossKind::l2;
            else
                throw std::invalid_argument("config: unknown loss '" + val + "'");
            cfg.loss_explicit = true;
        } else if (key == "ckpt_every") {
            cfg.ckpt_every = static_cast<uint64_t>(to_int(key, val));
        } else if (key == "log_every") {
            cfg.log_every = static_cast<uint64_t>(to_int(key, val));
        } else {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    }
    cfg.finalize();
    return cfg;
}

TrainConfig load_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_train_config(buf.str());
}

void TrainConfig::finalize() {
    switch (model.task) {
        case Task::super_resolution:
            degradation.kind = DegradationSpec::Kind::bicubic_down;
            degradation.scale = model.scale;
            break;
        case Task::denoise:
            degradation.kind = DegradationSpec::Kind::awgn;
            break;
        case Task::deblock:
            degradation.kind = DegradationSpec::Kind::jpeg;
            break;
    }
    degradation.seed = seed;
    if (!loss_explicit) loss = model.default_loss();
    if (batch < 1 || patch < 1) throw std::invalid_argument("config: batch and patch must be positive");
    if (!(initial_lr > 0)) throw std::invalid_argument("config: lr must be positive");
    model.validate();
    degradation.validate();
}

std::string TrainConfig::canonical_text() const {
    std::ostringstream out;
    out << "task=" << task_name(model.task) << "\n";
    if (model.task == Task::super_resolution) out << "scale=" << model.scale << "\n";
    if (model.task == Task::denoise) out << "sigma=" << fmt_double(degradation.sigma255) << "\n";
    if (model.task == Task::deblock) out << "quality=" << degradation.quality << "\n";
    out << "channels=" << model.trunk_channels << "\n";
    out << "groups=" << model.num_groups << "\n";
    out << "units=" << model.units_per_group << "\n";
    out << "bottleneck_ratio=" << model.bottleneck_ratio << "\n";
    out << "adam_variant=" << variant_name(model.adam_variant) << "\n";
    out << "aham=" << (model.aham_enabled ? "on" : "off") << "\n";
    out << "group_conv=" << (model.group_conv ? "on" : "off") << "\n";
    out << "trunk_style="
        << (model.trunk_style == TrunkStyle::rdag ? "rdag" : "ablation16") << "\n";
    out << "lr=" << fmt_double(initial_lr) << "\n";
    out << "lr_halve_every=" << halve_every << "\n";
    out << "max_iters=" << max_iters << "\n";
    out << "batch=" << batch << "\n";
    out << "patch=" << patch << "\n";
    out << "augment=" << (augment ? "on" : "off") << "\n";
    out << "seed=" << seed << "\n";
    out << "loss=" << (loss == LossKind::l1 ? "l1" : "l2") << "\n";
    out << "ckpt_every=" << ckpt_every << "\n";
    out << "log_every=" << log_every << "\n";
    return out.str();
}

DegradationSpec parse_degradation(const std::string& s, uint64_t seed) {
    DegradationSpec spec;
    spec.seed = seed;
    size_t colon = s.find(':');
    std::string kind = colon == std::string::npos ? s : s.substr(0, colon);
    std::string arg = colon == std::string::npos ? "" : s.substr(colon + 1);
    if (kind == "bicubic") {
        spec.kind = DegradationSpec::Kind::bicubic_down;
        if (!arg.empty()) spec.scale = static_cast<int>(to_int("scale", arg));
    } else if (kind == "awgn") {
        spec.kind = DegradationSpec::Kind::awgn;
        if (!arg.empty()) spec.sigma255 = to_double("sigma", arg);
    } else if (kind == "jpeg") {
        spec.kind = DegradationSpec::Kind::jpeg;
        if (!arg.empty()) spec.quality = static_cast<int>(to_int("quality", arg));
    } else {
        throw std::invalid_argument("degradation spec must be bicubic:<s>, awgn:<sigma> or jpeg:<q>");
    }
    spec.validate();
    return spec;
}

} // namespace acube
