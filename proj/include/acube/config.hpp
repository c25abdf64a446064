#pragma once

#include "acube/degrade.hpp"
#include "acube/model.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace acube {

struct TrainConfig {
    ModelConfig model;
    DegradationSpec degradation;
    double initial_lr = 2e-4;
    uint64_t halve_every = 200000;
    uint64_t max_iters = 20000; // desk-scale default; the schedule above is the published one
    int batch = 16;
    int patch = 48;
    bool augment = true;
    uint64_t seed = 1;
    LossKind loss = LossKind::l1;
    bool loss_explicit = false; // when false, the task picks the loss
    uint64_t ckpt_every = 0;    // 0: only at the end
    uint64_t log_every = 100;

    void finalize(); // derives task-dependent defaults, validates
    std::string canonical_text() const;
};

// Flat key=value text, '#' comments, unknown keys rejected.
std::map<std::string, std::string> parse_key_values(const std::string& text);
TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::string& path);

// Short degradation spec strings for the CLI: "bicubic:2", "awgn:30", "jpeg:10".
DegradationSpec parse_degradation(const std::string& s, uint64_t seed);

} // namespace acube
