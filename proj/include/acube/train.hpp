#pragma once

#include "acube/checkpoint.hpp"
#include "acube/config.hpp"
#include "acube/metrics.hpp"
#include "acube/model.hpp"
#include "acube/sampler.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace acube {

struct TrainReport {
    uint64_t iterations = 0;
    double final_loss = 0.0;
    double final_psnr = 0.0; // on the last logged batch
};

// Runs sample -> forward -> loss -> backward -> update for max_iters
// iterations, logging `iter=<n> lr=<v> loss=<v> [psnr=<v>]` lines. Writes a
// checkpoint at the end (and every ckpt_every iterations). Resuming from a
// checkpoint is bit-identical to an unbroken run.
TrainReport train(const TrainConfig& cfg, const std::string& data_dir,
                  const std::string& out_checkpoint, std::ostream& log,
                  const std::string& resume_checkpoint = "");

struct EvalRow {
    std::string name;
    double psnr_degraded = 0.0;
    double psnr_restored = 0.0;
    double ssim_restored = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    double mean_psnr_degraded = 0.0;
    double mean_psnr_restored = 0.0;
    double mean_ssim_restored = 0.0;
    std::string to_tsv() const;
};

// Full-image (no patching) restoration of every image in the directory.
// Super-resolution is measured on the Y channel with a `scale` border
// shave; denoising/deblocking on the gray channel with no shave.
EvalReport evaluate(Model& model, const std::string& data_dir, const DegradationSpec& spec);

// Restores one image with the model (inference only, clamped at save time).
ImageBuffer infer_image(Model& model, const ImageBuffer& input);

std::vector<std::string> list_images(const std::string& dir); // sorted

// Loads an image converted to the model's input space: Y/gray plane for
// single-channel tasks, RGB kept for super-resolution.
ImageBuffer load_for_task(const std::string& path, Task task);

} // namespace acube
