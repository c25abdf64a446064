#include "acube/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace acube {

namespace {

constexpr char kMagic[8] = {'A', 'C', 'U', 'B', 'C', 'K', 'P', 'T'};

void put_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<char*>(b), 4);
}

void put_u64(std::ostream& out, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<char*>(b), 8);
}

void put_f64s(std::ostream& out, const double* p, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        uint64_t bits;
        std::memcpy(&bits, &p[i], 8);
        put_u64(out, bits);
    }
}

void put_str(std::ostream& out, const std::string& s) {
    put_u32(out, static_cast<uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

void get_f64s(std::istream& in, double* p, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        uint64_t bits = get_u64(in);
        std::memcpy(&p[i], &bits, 8);
    }
}

std::string get_str(std::istream& in) {
    uint32_t n = get_u32(in);
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    return s;
}

} // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
    out.write(kMagic, 8);
    put_u32(out, Checkpoint::kVersion);
    put_u64(out, ck.iteration);
    put_u64(out, ck.seed);
    put_str(out, ck.config_text);
    put_u32(out, static_cast<uint32_t>(ck.params.size()));
    for (const auto& [name, t] : ck.params) {
        put_str(out, name);
        const Shape s = t.shape();
        put_u64(out, static_cast<uint64_t>(s.b));
        put_u64(out, static_cast<uint64_t>(s.c));
        put_u64(out, static_cast<uint64_t>(s.h));
        put_u64(out, static_cast<uint64_t>(s.w));
        put_f64s(out, t.data(), static_cast<size_t>(t.numel()));
    }
    out.put(ck.has_optimizer ? 1 : 0);
    if (ck.has_optimizer) {
        put_u64(out, ck.opt_step);
        for (size_t i = 0; i < ck.params.size(); ++i) {
            put_f64s(out, ck.opt_m[i].data(), ck.opt_m[i].size());
            put_f64s(out, ck.opt_v[i].data(), ck.opt_v[i].size());
        }
    }
    if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    uint32_t version = get_u32(in);
    if (version != Checkpoint::kVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

    Checkpoint ck;
    ck.iteration = get_u64(in);
    ck.seed = get_u64(in);
    ck.config_text = get_str(in);
    uint32_t nparams = get_u32(in);
    ck.params.reserve(nparams);
    for (uint32_t i = 0; i < nparams; ++i) {
        std::string name = get_str(in);
        Shape s;
        s.b = static_cast<int64_t>(get_u64(in));
        s.c = static_cast<int64_t>(get_u64(in));
        s.h = static_cast<int64_t>(get_u64(in));
        s.w = static_cast<int64_t>(get_u64(in));
        Tensor t(s);
        get_f64s(in, t.mutable_data(), static_cast<size_t>(s.numel()));
        ck.params.emplace_back(std::move(name), std::move(t));
    }
    int has_opt = in.get();
    if (has_opt == EOF) throw std::runtime_error("checkpoint: truncated file");
    ck.has_optimizer = has_opt != 0;
    if (ck.has_optimizer) {
        ck.opt_step = get_u64(in);
        ck.opt_m.resize(nparams);
        ck.opt_v.resize(nparams);
        for (uint32_t i = 0; i < nparams; ++i) {
            size_t n = static_cast<size_t>(ck.params[i].second.numel());
            ck.opt_m[i].resize(n);
            ck.opt_v[i].resize(n);
            get_f64s(in, ck.opt_m[i].data(), n);
            get_f64s(in, ck.opt_v[i].data(), n);
        }
    }
    return ck;
}

Checkpoint snapshot(Model& model, const AdamOptimizer* opt, uint64_t iteration, uint64_t seed,
                    const std::string& config_text) {
    Checkpoint ck;
    ck.iteration = iteration;
    ck.seed = seed;
    ck.config_text = config_text;
    model.visit_params([&](Parameter& p) {
        Tensor copy(p.value().shape(), p.value().values());
        ck.params.emplace_back(p.name(), std::move(copy));
    });
    if (opt) {
        ck.has_optimizer = true;
        ck.opt_step = opt->step_count();
        auto* mutable_opt = const_cast<AdamOptimizer*>(opt);
        for (size_t i = 0; i < ck.params.size(); ++i) {
            ck.opt_m.push_back(mutable_opt->first_moment(i));
            ck.opt_v.push_back(mutable_opt->second_moment(i));
        }
    }
    return ck;
}

void restore_into(Model& model, AdamOptimizer* opt, const Checkpoint& ck) {
    size_t idx = 0;
    model.visit_params([&](Parameter& p) {
        if (idx >= ck.params.size())
            throw std::runtime_error("checkpoint: too few parameters for this config");
        const auto& [name, t] = ck.params[idx];
        if (name != p.name())
            throw std::runtime_error("checkpoint: parameter order mismatch: " + name + " vs " +
                                     p.name());
        if (!(t.shape() == p.value().shape()))
            throw std::runtime_error("checkpoint: shape mismatch for " + name + ": " +
                                     t.shape().str() + " vs " + p.value().shape().str());
        std::copy(t.data(), t.data() + t.numel(), p.value().mutable_data());
        ++idx;
    });
    if (idx != ck.params.size())
        throw std::runtime_error("checkpoint: too many parameters for this config");
    if (opt) {
        if (!ck.has_optimizer) throw std::runtime_error("checkpoint: no optimizer state stored");
        opt->set_step_count(ck.opt_step);
        for (size_t i = 0; i < ck.params.size(); ++i) {
            opt->first_moment(i) = ck.opt_m[i];
            opt->second_moment(i) = ck.opt_v[i];
        }
    }
}

} // namespace acube
