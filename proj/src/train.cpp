#include "acube/train.hpp"

#include "acube/rng.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace acube {

namespace fs = std::filesystem;

std::vector<std::string> list_images(const std::string& dir) {
    std::vector<std::string> out;
    if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir);
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        if (ext == ".pgm" || ext == ".ppm" || ext == ".png") out.push_back(entry.path().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

ImageBuffer load_for_task(const std::string& path, Task task) {
    ImageBuffer img = load_image(path);
    if (task == Task::super_resolution) {
        if (img.channels != 3) {
            // promote gray to RGB so the 3-channel model accepts it
            ImageBuffer rgb(img.width, img.height, 3, ColorSpace::rgb);
            for (int c = 0; c < 3; ++c)
                std::copy(img.data.begin(), img.data.end(),
                          rgb.data.begin() + static_cast<size_t>(c) * img.pixel_count());
            return rgb;
        }
        return img;
    }
    if (img.channels == 3) return rgb_to_y(img);
    return img;
}

namespace {

double batch_psnr(const Tensor& pred, const Tensor& target) {
    // mean squared error over the clipped batch, as a quick PSNR readout
    const double* p = pred.data();
    const double* t = target.data();
    double acc = 0.0;
    for (int64_t i = 0; i < pred.numel(); ++i) {
        double d = std::clamp(p[i], 0.0, 1.0) - std::clamp(t[i], 0.0, 1.0);
        acc += d * d;
    }
    double mse = acc / static_cast<double>(pred.numel());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(10) << v;
    return s.str();
}

} // namespace

TrainReport train(const TrainConfig& cfg, const std::string& data_dir,
                  const std::string& out_checkpoint, std::ostream& log,
                  const std::string& resume_checkpoint) {
    std::vector<std::string> files = list_images(data_dir);
    if (files.empty()) throw std::runtime_error("train: no images in " + data_dir);
    std::vector<ImageBuffer> images;
    images.reserve(files.size());
    for (const std::string& f : files) images.push_back(load_for_task(f, cfg.model.task));

    Model model = build_model(cfg.model, cfg.seed);
    AdamOptimizer opt(model.parameters());
    uint64_t start_iter = 0;
    if (!resume_checkpoint.empty()) {
        Checkpoint ck = load_checkpoint(resume_checkpoint);
        restore_into(model, &opt, ck);
        start_iter = ck.iteration;
    }

    PatchSampler sampler{cfg.patch, cfg.batch, cfg.seed, cfg.augment, 0};
    const std::string config_text = cfg.canonical_text();

    TrainReport report;
    report.final_psnr = std::numeric_limits<double>::quiet_NaN();
    for (uint64_t iter = start_iter; iter < cfg.max_iters; ++iter) {
        double lr = lr_at(iter, cfg.initial_lr, cfg.halve_every);
        StreamRng pick(cfg.seed, "train/pick/" + std::to_string(iter));
        size_t img_index = pick.next_u64() % images.size();
        const ImageBuffer& img = images[img_index];
        sampler.image_salt = img_index;
        Batch batch = sample_batch(img, cfg.degradation, sampler, iter);

        autograd::GradMode grad_on(true);
        Tensor pred = model.forward(batch.lq);
        Tensor loss = loss_of(cfg.loss, pred, batch.hq);
        double loss_value = loss.item();
        if (!std::isfinite(loss_value))
            throw std::runtime_error("train: non-finite loss " + std::to_string(loss_value) +
                                     " at iteration " + std::to_string(iter));
        backward(loss);
        opt.step(lr);
        opt.zero_grad();

        report.final_loss = loss_value;
        report.iterations = iter + 1;
        bool last = iter + 1 == cfg.max_iters;
        if (cfg.log_every > 0 && ((iter + 1) % cfg.log_every == 0 || last)) {
            double p = batch_psnr(pred, batch.hq);
            report.final_psnr = p;
            log << "iter=" << iter + 1 << " lr=" << fmt(lr) << " loss=" << fmt(loss_value)
                << " psnr=" << fmt(p) << "\n";
        }
        if (cfg.ckpt_every > 0 && (iter + 1) % cfg.ckpt_every == 0 && !last) {
            Checkpoint ck = snapshot(model, &opt, iter + 1, cfg.seed, config_text);
            save_checkpoint(ck, out_checkpoint);
        }
    }

    Checkpoint ck = snapshot(model, &opt, cfg.max_iters, cfg.seed, config_text);
    save_checkpoint(ck, out_checkpoint);
    return report;
}

ImageBuffer infer_image(Model& model, const ImageBuffer& input) {
    Tensor out = model.forward(image_to_tensor(input));
    ColorSpace cs = input.colorspace;
    return tensor_to_image(out, 0, cs);
}

namespace {

ImageBuffer modcrop(const ImageBuffer& img, int m) {
    int w = img.width - img.width % m;
    int h = img.height - img.height % m;
    if (w == img.width && h == img.height) return img;
    ImageBuffer out(w, h, img.channels, img.colorspace);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(c, y, x) = img.at(c, y, x);
    return out;
}

ImageBuffer metric_plane(const ImageBuffer& img) {
    return img.channels == 3 ? rgb_to_y(clip01(img)) : img;
}

} // namespace

EvalReport evaluate(Model& model, const std::string& data_dir, const DegradationSpec& spec) {
    const Task task = model.cfg.task;
    if ((task == Task::super_resolution) != (spec.kind == DegradationSpec::Kind::bicubic_down) ||
        (task == Task::denoise) != (spec.kind == DegradationSpec::Kind::awgn) ||
        (task == Task::deblock) != (spec.kind == DegradationSpec::Kind::jpeg))
        throw std::invalid_argument("evaluate: degradation does not match the model task");
    if (task == Task::super_resolution && spec.scale != model.cfg.scale)
        throw std::invalid_argument("evaluate: scale does not match the model");

    std::vector<std::string> files = list_images(data_dir);
    if (files.empty()) throw std::runtime_error("evaluate: no images in " + data_dir);

    const int shave = task == Task::super_resolution ? model.cfg.scale : 0;
    EvalReport report;
    uint64_t salt = 0;
    for (const std::string& f : files) {
        ImageBuffer hq = load_for_task(f, task);
        if (task == Task::super_resolution) hq = modcrop(hq, model.cfg.scale);
        ImageBuffer lq = apply_degradation(hq, spec, salt++);
        ImageBuffer restored = infer_image(model, lq);

        ImageBuffer hq_m = metric_plane(hq);
        ImageBuffer restored_m = metric_plane(restored);
        // reference for the degraded input: upscale LQ back for SR
        ImageBuffer degraded_ref =
            task == Task::super_resolution
                ? bicubic_resize(clip01(lq), static_cast<double>(model.cfg.scale), false)
                : lq;
        ImageBuffer degraded_m = metric_plane(degraded_ref);

        EvalRow row;
        row.name = fs::path(f).filename().string();
        row.psnr_degraded = psnr(hq_m, degraded_m, shave);
        row.psnr_restored = psnr(hq_m, restored_m, shave);
        row.ssim_restored = ssim(hq_m, restored_m);
        report.rows.push_back(row);
    }
    for (const EvalRow& r : report.rows) {
        report.mean_psnr_degraded += r.psnr_degraded;
        report.mean_psnr_restored += r.psnr_restored;
        report.mean_ssim_restored += r.ssim_restored;
    }
    double n = static_cast<double>(report.rows.size());
    report.mean_psnr_degraded /= n;
    report.mean_psnr_restored /= n;
    report.mean_ssim_restored /= n;
    return report;
}

std::string EvalReport::to_tsv() const {
    std::ostringstream out;
    out << "image\tpsnr_in\tpsnr\tssim\n";
    out << std::fixed << std::setprecision(4);
    for (const EvalRow& r : rows)
        out << r.name << "\t" << r.psnr_degraded << "\t" << r.psnr_restored << "\t"
            << r.ssim_restored << "\n";
    out << "mean\t" << mean_psnr_degraded << "\t" << mean_psnr_restored << "\t"
        << mean_ssim_restored << "\n";
    return out.str();
}

} // namespace acube
