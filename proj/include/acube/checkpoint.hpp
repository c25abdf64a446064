#pragma once

#include "acube/model.hpp"
#include "acube/optimizer.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace acube {

// Self-describing binary container: magic, version, iteration, seed, a
// config echo, length-prefixed name/shape/value records per parameter and
// optional optimizer moments. Everything little-endian 64-bit floats;
// save -> load -> save is byte-identical.
struct Checkpoint {
    static constexpr uint32_t kVersion = 1;

    uint64_t iteration = 0;
    uint64_t seed = 0; // master RNG seed; streams are derived per use
    std::string config_text;
    std::vector<std::pair<std::string, Tensor>> params; // model order

    bool has_optimizer = false;
    uint64_t opt_step = 0;
    std::vector<std::vector<double>> opt_m, opt_v; // aligned with params
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint snapshot(Model& model, const AdamOptimizer* opt, uint64_t iteration, uint64_t seed,
                    const std::string& config_text);

// Copies values (and moments if present) back; every shape is validated
// against the model built from the config.
void restore_into(Model& model, AdamOptimizer* opt, const Checkpoint& ck);

} // namespace acube
