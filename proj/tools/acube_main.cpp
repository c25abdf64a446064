#include "acube/checkpoint.hpp"
#include "acube/config.hpp"
#include "acube/gradcheck.hpp"
#include "acube/rng.hpp"
#include "acube/train.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>

namespace {

using namespace acube;

Model model_from_checkpoint(const std::string& path, TrainConfig* cfg_out) {
    Checkpoint ck = load_checkpoint(path);
    TrainConfig cfg = parse_train_config(ck.config_text);
    Model model = build_model(cfg.model, cfg.seed);
    restore_into(model, nullptr, ck);
    if (cfg_out) *cfg_out = cfg;
    return model;
}

Task parse_task(const std::string& s) {
    if (s == "sr") return Task::super_resolution;
    if (s == "denoise") return Task::denoise;
    if (s == "deblock") return Task::deblock;
    throw CLI::ValidationError("--task", "must be sr, denoise or deblock");
}

int run(int argc, char** argv) {
    CLI::App app{"A-CubeNet image restoration toolkit"};
    app.require_subcommand(1);

    // train
    auto* train_cmd = app.add_subcommand("train", "train a model on a directory of images");
    std::string train_config, train_data, train_out, train_resume;
    train_cmd->add_option("--config", train_config, "key=value config file")->required();
    train_cmd->add_option("--data", train_data, "directory of 8-bit images")->required();
    train_cmd->add_option("--out", train_out, "output checkpoint path")->required();
    train_cmd->add_option("--resume", train_resume, "checkpoint to continue from");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM table for degraded->restored images");
    std::string eval_ckpt, eval_data, eval_task;
    int eval_scale = 0, eval_quality = 0;
    double eval_sigma = 0;
    uint64_t eval_seed = 0;
    eval_cmd->add_option("--ckpt", eval_ckpt)->required();
    eval_cmd->add_option("--data", eval_data)->required();
    eval_cmd->add_option("--task", eval_task, "sr | denoise | deblock")->required();
    eval_cmd->add_option("--scale", eval_scale, "SR scale");
    eval_cmd->add_option("--sigma", eval_sigma, "noise level on the 0..255 scale");
    eval_cmd->add_option("--quality", eval_quality, "compression quality");
    eval_cmd->add_option("--seed", eval_seed, "noise seed");

    // infer
    auto* infer_cmd = app.add_subcommand("infer", "restore a single image");
    std::string infer_ckpt, infer_in, infer_out;
    infer_cmd->add_option("--ckpt", infer_ckpt)->required();
    infer_cmd->add_option("--in", infer_in)->required();
    infer_cmd->add_option("--out", infer_out, "output .pgm/.ppm path")->required();

    // params
    auto* params_cmd = app.add_subcommand("params", "exact trainable parameter count");
    std::string params_config;
    params_cmd->add_option("--config", params_config)->required();

    // gradcheck
    auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient check");
    std::string grad_config;
    grad_cmd->add_option("--config", grad_config)->required();

    // degrade
    auto* degrade_cmd = app.add_subcommand("degrade", "apply a degradation to an image");
    std::string degrade_in, degrade_out, degrade_spec;
    uint64_t degrade_seed = 0;
    degrade_cmd->add_option("--in", degrade_in)->required();
    degrade_cmd->add_option("--out", degrade_out)->required();
    degrade_cmd->add_option("--spec", degrade_spec, "bicubic:<s> | awgn:<sigma> | jpeg:<q>")->required();
    degrade_cmd->add_option("--seed", degrade_seed);

    CLI11_PARSE(app, argc, argv);

    if (train_cmd->parsed()) {
        TrainConfig cfg = load_train_config(train_config);
        TrainReport report = train(cfg, train_data, train_out, std::cout, train_resume);
        std::cout << "done iters=" << report.iterations << " loss=" << report.final_loss << "\n";
        return 0;
    }

    if (eval_cmd->parsed()) {
        TrainConfig cfg;
        Model model = model_from_checkpoint(eval_ckpt, &cfg);
        if (parse_task(eval_task) != cfg.model.task)
            throw std::runtime_error("eval: checkpoint was trained for a different task");
        DegradationSpec spec = cfg.degradation;
        spec.seed = eval_seed;
        if (eval_scale > 0) spec.scale = eval_scale;
        if (eval_sigma > 0) spec.sigma255 = eval_sigma;
        if (eval_quality > 0) spec.quality = eval_quality;
        spec.validate();
        std::cout << evaluate(model, eval_data, spec).to_tsv();
        return 0;
    }

    if (infer_cmd->parsed()) {
        TrainConfig cfg;
        Model model = model_from_checkpoint(infer_ckpt, &cfg);
        ImageBuffer input = load_for_task(infer_in, cfg.model.task);
        save_image(clip01(infer_image(model, input)), infer_out);
        return 0;
    }

    if (params_cmd->parsed()) {
        TrainConfig cfg = load_train_config(params_config);
        Model model = build_model(cfg.model, cfg.seed);
        int64_t n = model.count_params();
        std::cout << n << " (" << std::llround(static_cast<double>(n) / 1000.0) << "K)\n";
        return 0;
    }

    if (grad_cmd->parsed()) {
        TrainConfig cfg = load_train_config(grad_config);
        Model model = build_model(cfg.model, cfg.seed);
        StreamRng rng(cfg.seed, "gradcheck/data");
        Tensor input({1, cfg.model.in_channels(), 8, 8});
        for (int64_t i = 0; i < input.numel(); ++i) input.mutable_data()[i] = rng.next_double();
        int s = cfg.model.has_upscale() ? cfg.model.scale : 1;
        Tensor target({1, cfg.model.out_channels(), 8 * s, 8 * s});
        // offset keeps an L1 loss away from its kink
        for (int64_t i = 0; i < target.numel(); ++i)
            target.mutable_data()[i] = 2.0 + rng.next_double();
        double err = model_gradient_check(model, input, target, cfg.loss);
        std::cout << err << "\n";
        return err < 1e-4 ? 0 : 2;
    }

    if (degrade_cmd->parsed()) {
        DegradationSpec spec = parse_degradation(degrade_spec, degrade_seed);
        ImageBuffer img = load_image(degrade_in);
        if (spec.kind == DegradationSpec::Kind::jpeg && img.channels == 3) img = rgb_to_y(img);
        save_image(clip01(apply_degradation(img, spec, 0)), degrade_out);
        return 0;
    }

    return 1;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
